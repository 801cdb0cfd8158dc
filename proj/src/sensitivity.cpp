#include "mrtk/sensitivity.hpp"

#include "mrtk/parallel.hpp"
#include "mrtk/rng.hpp"
#include "mrtk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mrtk {

QResult cochran_q(const HarmonizedSet& set) { return cochran_q(estimation_input(set)); }

QResult cochran_q(const EstimationInput& input) {
    const Eigen::Index k = input.size();
    if (k < 2) throw std::invalid_argument("cochran_q: needs at least 2 instruments");
    Eigen::VectorXd w = input.se_outcome.array().square().inverse();
    auto fit = stats::wls_origin(input.beta_exposure, input.beta_outcome, w);
    QResult result;
    result.q = fit.rss_w;  // weighted RSS about the IVW slope is exactly Q
    result.df = static_cast<int>(k - 1);
    result.pvalue = stats::chi_squared_upper_tail(result.q, result.df);
    return result;
}

namespace {

// Running sums that make leave-one-out IVW slopes O(1) per instrument.
struct IvwSums {
    double s_xy = 0.0;
    double s_xx = 0.0;

    static IvwSums of(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                      const Eigen::VectorXd& w) {
        IvwSums s;
        for (Eigen::Index i = 0; i < bx.size(); ++i) {
            s.s_xy += w(i) * bx(i) * by(i);
            s.s_xx += w(i) * bx(i) * bx(i);
        }
        return s;
    }

    double slope() const { return s_xy / s_xx; }

    double slope_without(double w, double bx, double by) const {
        return (s_xy - w * bx * by) / (s_xx - w * bx * bx);
    }
};

// Weighted LOO residual contributions c_i = w_i * (by_i - slope_{-i} * bx_i)^2.
void loo_contributions(const Eigen::VectorXd& bx, const Eigen::VectorXd& by,
                       const Eigen::VectorXd& w, Eigen::VectorXd& out) {
    const IvwSums sums = IvwSums::of(bx, by, w);
    for (Eigen::Index i = 0; i < bx.size(); ++i) {
        const double slope = sums.slope_without(w(i), bx(i), by(i));
        const double resid = by(i) - slope * bx(i);
        out(i) = w(i) * resid * resid;
    }
}

}  // namespace

PressoReport presso(const HarmonizedSet& set, const PressoOptions& options) {
    return presso(estimation_input(set), options);
}

PressoReport presso(const EstimationInput& input, const PressoOptions& options) {
    const Eigen::Index k = input.size();
    if (k < 4) throw std::invalid_argument("presso: needs at least 4 instruments");
    if (options.n_sim < 1000) throw std::invalid_argument("presso: n_sim must be >= 1000");
    if (options.n_distortion < 1)
        throw std::invalid_argument("presso: n_distortion must be >= 1");

    Eigen::VectorXd w = input.se_outcome.array().square().inverse();

    Eigen::VectorXd obs(k);
    loo_contributions(input.beta_exposure, input.beta_outcome, w, obs);
    const double rss_obs = obs.sum();

    // expected outcome betas under the leave-one-out fits
    const IvwSums sums = IvwSums::of(input.beta_exposure, input.beta_outcome, w);
    Eigen::VectorXd expected(k);
    for (Eigen::Index i = 0; i < k; ++i)
        expected(i) = sums.slope_without(w(i), input.beta_exposure(i), input.beta_outcome(i)) *
                      input.beta_exposure(i);

    const std::uint64_t presso_seed = rng::derive_seed(options.seed, "presso");
    const std::size_t n_sim = static_cast<std::size_t>(options.n_sim);
    std::vector<char> global_hit(n_sim, 0);
    std::vector<std::vector<char>> snp_hit(n_sim);

    parallel_for(n_sim, options.threads, [&](std::size_t t) {
        rng::Stream stream(presso_seed, t);
        Eigen::VectorXd bx(k), by(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            bx(i) = stream.normal(input.beta_exposure(i), input.se_exposure(i));
            by(i) = stream.normal(expected(i), input.se_outcome(i));
        }
        Eigen::VectorXd sim(k);
        loo_contributions(bx, by, w, sim);
        global_hit[t] = sim.sum() >= rss_obs ? 1 : 0;
        std::vector<char> hits(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < k; ++i)
            hits[static_cast<std::size_t>(i)] = sim(i) >= obs(i) ? 1 : 0;
        snp_hit[t] = std::move(hits);
    });

    PressoReport report;
    report.n_sim = options.n_sim;
    report.seed = options.seed;
    report.global_rss_observed = rss_obs;

    std::size_t global_count = 0;
    std::vector<std::size_t> snp_count(static_cast<std::size_t>(k), 0);
    for (std::size_t t = 0; t < n_sim; ++t) {
        global_count += global_hit[t];
        for (Eigen::Index i = 0; i < k; ++i)
            snp_count[static_cast<std::size_t>(i)] += snp_hit[t][static_cast<std::size_t>(i)];
    }
    report.global_pvalue = (static_cast<double>(global_count) + 1.0) /
                           (static_cast<double>(n_sim) + 1.0);

    std::vector<Eigen::Index> outlier_idx;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double p = (static_cast<double>(snp_count[static_cast<std::size_t>(i)]) + 1.0) /
                         (static_cast<double>(n_sim) + 1.0);
        report.per_snp.emplace_back(input.rsids[static_cast<std::size_t>(i)], p);
        if (p * static_cast<double>(k) < options.outlier_alpha) {
            report.outliers.push_back(input.rsids[static_cast<std::size_t>(i)]);
            outlier_idx.push_back(i);
        }
    }

    report.beta_before = sums.slope();
    report.beta_after = report.beta_before;

    if (!outlier_idx.empty()) {
        // IVW without the flagged instruments
        double s_xy = sums.s_xy;
        double s_xx = sums.s_xx;
        for (Eigen::Index i : outlier_idx) {
            s_xy -= w(i) * input.beta_exposure(i) * input.beta_outcome(i);
            s_xx -= w(i) * input.beta_exposure(i) * input.beta_exposure(i);
        }
        report.beta_after = s_xx > 0.0 ? s_xy / s_xx : std::numeric_limits<double>::quiet_NaN();

        // null: the beta shift from removing random outlier-sized subsets of
        // the non-outlier instruments
        std::vector<Eigen::Index> pool;
        for (Eigen::Index i = 0; i < k; ++i)
            if (std::find(outlier_idx.begin(), outlier_idx.end(), i) == outlier_idx.end())
                pool.push_back(i);

        if (!std::isfinite(report.beta_after) || pool.size() < outlier_idx.size()) {
            report.distortion_pvalue = 1.0;
        } else {
            const double obs_shift = std::abs(report.beta_after - report.beta_before);
            const std::size_t n_null = static_cast<std::size_t>(options.n_distortion);
            std::vector<char> null_hit(n_null, 0);
            parallel_for(n_null, options.threads, [&](std::size_t j) {
                rng::Stream stream(presso_seed, n_sim + j);
                // partial Fisher-Yates for a subset of size |outliers|
                std::vector<Eigen::Index> deck = pool;
                double nxy = sums.s_xy;
                double nxx = sums.s_xx;
                for (std::size_t d = 0; d < outlier_idx.size(); ++d) {
                    const std::size_t pick =
                        d + static_cast<std::size_t>(stream.bounded(deck.size() - d));
                    std::swap(deck[d], deck[pick]);
                    const Eigen::Index i = deck[d];
                    nxy -= w(i) * input.beta_exposure(i) * input.beta_outcome(i);
                    nxx -= w(i) * input.beta_exposure(i) * input.beta_exposure(i);
                }
                const double shift = std::abs(nxy / nxx - report.beta_before);
                null_hit[j] = shift >= obs_shift ? 1 : 0;
            });
            std::size_t exceed = 0;
            for (char h : null_hit) exceed += h;
            report.distortion_pvalue = (static_cast<double>(exceed) + 1.0) /
                                       (static_cast<double>(n_null) + 1.0);
        }
    }
    return report;
}

std::vector<std::pair<std::string, MrEstimate>> leave_one_out(const HarmonizedSet& set,
                                                              IvwMode mode) {
    return leave_one_out(estimation_input(set), mode, set.exposure_meta.study_id,
                         set.outcome_meta.study_id);
}

std::vector<std::pair<std::string, MrEstimate>> leave_one_out(const EstimationInput& input,
                                                              IvwMode mode,
                                                              std::string exposure_id,
                                                              std::string outcome_id) {
    const Eigen::Index k = input.size();
    if (k < 3) throw std::invalid_argument("leave_one_out: needs at least 3 instruments");
    std::vector<std::pair<std::string, MrEstimate>> rows;
    rows.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index drop = 0; drop < k; ++drop) {
        EstimationInput reduced;
        reduced.beta_exposure.resize(k - 1);
        reduced.se_exposure.resize(k - 1);
        reduced.beta_outcome.resize(k - 1);
        reduced.se_outcome.resize(k - 1);
        Eigen::Index at = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (i == drop) continue;
            reduced.rsids.push_back(input.rsids[static_cast<std::size_t>(i)]);
            reduced.beta_exposure(at) = input.beta_exposure(i);
            reduced.se_exposure(at) = input.se_exposure(i);
            reduced.beta_outcome(at) = input.beta_outcome(i);
            reduced.se_outcome(at) = input.se_outcome(i);
            ++at;
        }
        rows.emplace_back(input.rsids[static_cast<std::size_t>(drop)],
                          ivw(reduced, mode, exposure_id, outcome_id));
    }
    return rows;
}

DelimitedTable loo_table(std::span<const std::pair<std::string, MrEstimate>> rows,
                         char delimiter) {
    DelimitedTable table;
    table.delimiter = delimiter;
    table.header = {"excluded_rsid", "method", "beta", "se", "pvalue",
                    "or",            "or_ci_low", "or_ci_high", "n_snps"};
    for (const auto& [rsid, est] : rows) {
        table.rows.push_back({rsid, to_string(est.method), format_double(est.beta),
                              format_double(est.se), format_double(est.pvalue),
                              format_double(est.or_point), format_double(est.or_ci_low),
                              format_double(est.or_ci_high), std::to_string(est.n_snps)});
    }
    return table;
}

}  // namespace mrtk
