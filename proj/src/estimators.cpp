#include "mrtk/estimators.hpp"

#include "mrtk/parallel.hpp"
#include "mrtk/rng.hpp"
#include "mrtk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace mrtk {

std::string to_string(Method method) {
    switch (method) {
        case Method::wald: return "wald";
        case Method::ivw_fixed: return "ivw_fixed";
        case Method::ivw_random: return "ivw_random";
        case Method::egger: return "egger";
        case Method::egger_intercept: return "egger_intercept";
        case Method::weighted_median: return "weighted_median";
        case Method::mvmr: return "mvmr";
    }
    return "unknown";
}

Method method_from_string(const std::string& text) {
    if (text == "wald") return Method::wald;
    if (text == "ivw_fixed") return Method::ivw_fixed;
    if (text == "ivw_random" || text == "ivw") return Method::ivw_random;
    if (text == "egger") return Method::egger;
    if (text == "egger_intercept") return Method::egger_intercept;
    if (text == "weighted_median" || text == "weighted-median") return Method::weighted_median;
    if (text == "mvmr") return Method::mvmr;
    throw std::invalid_argument("unknown method: " + text);
}

MrEstimate make_estimate(Method method, double beta, double se, int n_snps,
                         std::string exposure_id, std::string outcome_id) {
    if (!(se > 0.0)) throw std::invalid_argument("make_estimate: se must be positive");
    MrEstimate est;
    est.method = method;
    est.beta = beta;
    est.se = se;
    est.pvalue = stats::two_sided_normal_p(beta / se);
    est.or_point = std::exp(beta);
    est.or_ci_low = std::exp(beta - stats::kCi95Z * se);
    est.or_ci_high = std::exp(beta + stats::kCi95Z * se);
    est.n_snps = n_snps;
    est.exposure_id = std::move(exposure_id);
    est.outcome_id = std::move(outcome_id);
    return est;
}

EstimationInput estimation_input(const HarmonizedSet& set) {
    auto kept = set.kept();
    EstimationInput input;
    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    input.rsids.reserve(kept.size());
    input.beta_exposure.resize(n);
    input.se_exposure.resize(n);
    input.beta_outcome.resize(n);
    input.se_outcome.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Instrument& inst = *kept[static_cast<std::size_t>(i)];
        input.rsids.push_back(inst.rsid);
        input.beta_exposure(i) = inst.beta_exposure;
        input.se_exposure(i) = inst.se_exposure;
        input.beta_outcome(i) = inst.beta_outcome;
        input.se_outcome(i) = inst.se_outcome;
    }
    return input;
}

MrEstimate wald_ratio(const Instrument& inst, WaldSeOrder order, std::string exposure_id,
                      std::string outcome_id) {
    if (inst.status != InstrumentStatus::kept)
        throw std::invalid_argument("wald_ratio: instrument " + inst.rsid + " is not kept");
    if (inst.beta_exposure == 0.0) throw std::invalid_argument("undefined ratio");
    const double bx = inst.beta_exposure;
    const double beta = inst.beta_outcome / bx;
    double se = inst.se_outcome / std::abs(bx);
    if (order == WaldSeOrder::second) {
        const double extra =
            inst.beta_outcome * inst.beta_outcome * inst.se_exposure * inst.se_exposure /
            (bx * bx * bx * bx);
        se = std::sqrt(se * se + extra);
    }
    MrEstimate est = make_estimate(Method::wald, beta, se, 1, std::move(exposure_id),
                                   std::move(outcome_id));
    return est;
}

MrEstimate ivw(const HarmonizedSet& set, IvwMode mode) {
    return ivw(estimation_input(set), mode, set.exposure_meta.study_id,
               set.outcome_meta.study_id);
}

MrEstimate ivw(const EstimationInput& input, IvwMode mode, std::string exposure_id,
               std::string outcome_id) {
    const Eigen::Index k = input.size();
    if (k == 0) throw std::invalid_argument("ivw: zero kept instruments");
    if (k == 1) {
        Instrument inst;
        inst.rsid = input.rsids[0];
        inst.beta_exposure = input.beta_exposure(0);
        inst.se_exposure = input.se_exposure(0);
        inst.beta_outcome = input.beta_outcome(0);
        inst.se_outcome = input.se_outcome(0);
        MrEstimate est = wald_ratio(inst, WaldSeOrder::first, std::move(exposure_id),
                                    std::move(outcome_id));
        est.method = mode == IvwMode::fixed_effect ? Method::ivw_fixed : Method::ivw_random;
        return est;
    }
    Eigen::VectorXd w = input.se_outcome.array().square().inverse();
    auto fit = stats::wls_origin(input.beta_exposure, input.beta_outcome, w);
    double se = fit.se;
    if (mode == IvwMode::random_effect) {
        const double q_over_df = fit.rss_w / static_cast<double>(k - 1);
        se *= std::sqrt(std::max(1.0, q_over_df));
    }
    return make_estimate(mode == IvwMode::fixed_effect ? Method::ivw_fixed : Method::ivw_random,
                         fit.beta, se, static_cast<int>(k), std::move(exposure_id),
                         std::move(outcome_id));
}

EggerResult egger(const HarmonizedSet& set) {
    return egger(estimation_input(set), set.exposure_meta.study_id, set.outcome_meta.study_id);
}

EggerResult egger(const EstimationInput& input, std::string exposure_id,
                  std::string outcome_id) {
    const Eigen::Index k = input.size();
    if (k < 3) throw std::invalid_argument("egger: needs at least 3 instruments");
    // Egger is orientation-sensitive; fix the convention to b_exp >= 0.
    Eigen::VectorXd bx = input.beta_exposure;
    Eigen::VectorXd by = input.beta_outcome;
    for (Eigen::Index i = 0; i < k; ++i) {
        if (bx(i) < 0.0) {
            bx(i) = -bx(i);
            by(i) = -by(i);
        }
    }
    Eigen::VectorXd w = input.se_outcome.array().square().inverse();
    auto fit = stats::wls_line(bx, by, w);
    const double sigma2 = std::max(1.0, fit.rss_w / static_cast<double>(k - 2));
    const double scale = std::sqrt(sigma2);
    EggerResult result;
    result.slope = make_estimate(Method::egger, fit.slope, fit.se_slope * scale,
                                 static_cast<int>(k), exposure_id, outcome_id);
    result.intercept = make_estimate(Method::egger_intercept, fit.intercept,
                                     fit.se_intercept * scale, static_cast<int>(k),
                                     std::move(exposure_id), std::move(outcome_id));
    return result;
}

double weighted_median_point(std::span<const double> ratios, std::span<const double> weights) {
    const std::size_t k = ratios.size();
    if (k == 0 || weights.size() != k)
        throw std::invalid_argument("weighted_median_point: bad input sizes");
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ratios[a] < ratios[b];
    });
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("weighted_median_point: zero total weight");

    // s_i = (cumulative weight up to i) - w_i/2, normalized
    std::vector<double> s(k);
    double cum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = weights[order[i]];
        s[i] = (cum + 0.5 * w) / total;
        cum += w;
    }
    if (s[0] >= 0.5) return ratios[order[0]];
    if (s[k - 1] < 0.5) return ratios[order[k - 1]];
    std::size_t hi = 1;
    while (s[hi] < 0.5) ++hi;
    const std::size_t lo = hi - 1;
    const double t = (0.5 - s[lo]) / (s[hi] - s[lo]);
    return ratios[order[lo]] + t * (ratios[order[hi]] - ratios[order[lo]]);
}

MrEstimate weighted_median(const HarmonizedSet& set, int n_boot, std::uint64_t seed,
                           unsigned threads) {
    return weighted_median(estimation_input(set), n_boot, seed, threads,
                           set.exposure_meta.study_id, set.outcome_meta.study_id);
}

MrEstimate weighted_median(const EstimationInput& input, int n_boot, std::uint64_t seed,
                           unsigned threads, std::string exposure_id, std::string outcome_id) {
    const Eigen::Index k = input.size();
    if (k < 3) throw std::invalid_argument("weighted_median: needs at least 3 instruments");
    if (n_boot < 100) throw std::invalid_argument("weighted_median: n_boot must be >= 100");

    auto point_for = [&](const Eigen::VectorXd& bx, const Eigen::VectorXd& by) {
        std::vector<double> ratios(static_cast<std::size_t>(k));
        std::vector<double> weights(static_cast<std::size_t>(k));
        for (Eigen::Index i = 0; i < k; ++i) {
            ratios[static_cast<std::size_t>(i)] = by(i) / bx(i);
            const double w = bx(i) / input.se_outcome(i);
            weights[static_cast<std::size_t>(i)] = w * w;
        }
        return weighted_median_point(ratios, weights);
    };

    for (Eigen::Index i = 0; i < k; ++i)
        if (input.beta_exposure(i) == 0.0)
            throw std::invalid_argument("weighted_median: zero exposure beta for " +
                                        input.rsids[static_cast<std::size_t>(i)]);

    const double estimate = point_for(input.beta_exposure, input.beta_outcome);

    // parametric bootstrap, one RNG stream per iteration
    const std::uint64_t wm_seed = rng::derive_seed(seed, "weighted_median");
    std::vector<double> boots(static_cast<std::size_t>(n_boot));
    parallel_for(static_cast<std::size_t>(n_boot), threads, [&](std::size_t b) {
        rng::Stream stream(wm_seed, b);
        Eigen::VectorXd bx(k), by(k);
        for (Eigen::Index i = 0; i < k; ++i) {
            bx(i) = stream.normal(input.beta_exposure(i), input.se_exposure(i));
            by(i) = stream.normal(input.beta_outcome(i), input.se_outcome(i));
            if (bx(i) == 0.0) bx(i) = input.beta_exposure(i);  // measure-zero guard
        }
        boots[b] = point_for(bx, by);
    });
    double mean = 0.0;
    for (double v : boots) mean += v;
    mean /= static_cast<double>(n_boot);
    double ss = 0.0;
    for (double v : boots) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / static_cast<double>(n_boot - 1));

    MrEstimate est = make_estimate(Method::weighted_median, estimate, se, static_cast<int>(k),
                                   std::move(exposure_id), std::move(outcome_id));
    return est;
}

std::vector<MrEstimate> mvmr(const MvmrInput& input, IvwMode mode) {
    const Eigen::Index n = input.beta_exposures.rows();
    const Eigen::Index k = input.beta_exposures.cols();
    if (k < 1) throw std::invalid_argument("mvmr: no exposures");
    if (n <= k) throw std::invalid_argument("mvmr: needs more instruments than exposures");
    if (input.beta_outcome.size() != n || input.se_outcome.size() != n)
        throw std::invalid_argument("mvmr: size mismatch");

    // inert columns: identically zero betas carry no information
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < k; ++j)
        if (input.beta_exposures.col(j).cwiseAbs().maxCoeff() > 0.0) active.push_back(j);

    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(active.size()));
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        X.col(j) = input.beta_exposures.col(active[static_cast<std::size_t>(j)]);

    Eigen::VectorXd w = input.se_outcome.array().square().inverse();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd se = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
    if (!active.empty()) {
        auto fit = stats::wls_multi(X, input.beta_outcome, w);
        double scale = 1.0;
        if (mode == IvwMode::random_effect) {
            const double sigma2 = fit.rss_w / static_cast<double>(n - X.cols());
            scale = std::sqrt(std::max(1.0, sigma2));
        }
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            beta(active[static_cast<std::size_t>(j)]) = fit.beta(j);
            se(active[static_cast<std::size_t>(j)]) = fit.se(j) * scale;
        }
    }

    std::vector<MrEstimate> estimates;
    estimates.reserve(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        MrEstimate est;
        if (std::isfinite(se(j))) {
            est = make_estimate(Method::mvmr, beta(j), se(j), static_cast<int>(n));
        } else {
            est.method = Method::mvmr;
            est.beta = 0.0;
            est.se = std::numeric_limits<double>::infinity();
            est.pvalue = 1.0;
            est.or_point = 1.0;
            est.or_ci_low = 0.0;
            est.or_ci_high = std::numeric_limits<double>::infinity();
            est.n_snps = static_cast<int>(n);
        }
        if (static_cast<std::size_t>(j) < input.exposure_ids.size())
            est.exposure_id = input.exposure_ids[static_cast<std::size_t>(j)];
        est.outcome_id = input.outcome_id;
        estimates.push_back(std::move(est));
    }
    return estimates;
}

MvmrInput mvmr_align(const std::vector<std::vector<SummaryRecord>>& exposures,
                     std::span<const SummaryRecord> outcome, double palindrome_eaf_window,
                     std::vector<std::string> exposure_ids, std::string outcome_id) {
    if (exposures.empty()) throw std::invalid_argument("mvmr_align: no exposure studies");

    std::vector<std::unordered_map<std::string, const SummaryRecord*>> exposure_index;
    exposure_index.reserve(exposures.size());
    for (const auto& study : exposures) {
        std::unordered_map<std::string, const SummaryRecord*> index;
        for (const auto& rec : study) index.try_emplace(rec.rsid, &rec);
        exposure_index.push_back(std::move(index));
    }

    MvmrInput input;
    input.exposure_ids = std::move(exposure_ids);
    input.outcome_id = std::move(outcome_id);

    std::vector<std::vector<double>> columns(exposures.size());
    std::vector<double> by, sy;

    for (const auto& out : outcome) {
        // every exposure study must carry the variant
        bool everywhere = true;
        for (const auto& index : exposure_index)
            if (!index.count(out.rsid)) {
                everywhere = false;
                break;
            }
        if (!everywhere) continue;

        // orient every exposure beta onto the outcome's effect allele
        std::vector<double> aligned(exposures.size());
        bool usable = true;
        for (std::size_t j = 0; j < exposures.size(); ++j) {
            const SummaryRecord* exp_rec = exposure_index[j].at(out.rsid);
            PairAlignment pa = align_pair(out, *exp_rec, palindrome_eaf_window);
            if (!pa.kept) {
                usable = false;
                break;
            }
            aligned[j] = pa.sign * exp_rec->beta;
        }
        if (!usable) continue;

        for (std::size_t j = 0; j < exposures.size(); ++j) columns[j].push_back(aligned[j]);
        input.rsids.push_back(out.rsid);
        by.push_back(out.beta);
        sy.push_back(out.se);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(input.rsids.size());
    input.beta_exposures.resize(n, static_cast<Eigen::Index>(exposures.size()));
    for (std::size_t j = 0; j < exposures.size(); ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            input.beta_exposures(i, static_cast<Eigen::Index>(j)) =
                columns[j][static_cast<std::size_t>(i)];
    input.beta_outcome = Eigen::Map<Eigen::VectorXd>(by.data(), n);
    input.se_outcome = Eigen::Map<Eigen::VectorXd>(sy.data(), n);
    return input;
}

}  // namespace mrtk
