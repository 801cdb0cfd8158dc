#include "mrtk/estimators.hpp"

#include "mrtk/rng.hpp"
#include "mrtk/sensitivity.hpp"
#include "mrtk/stats.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mrtk;

namespace {

Instrument make_instrument(double bx, double sx, double by, double sy) {
    Instrument inst;
    inst.rsid = "rs1";
    inst.effect_allele = 'A';
    inst.other_allele = 'G';
    inst.beta_exposure = bx;
    inst.se_exposure = sx;
    inst.beta_outcome = by;
    inst.se_outcome = sy;
    inst.status = InstrumentStatus::kept;
    return inst;
}

HarmonizedSet random_set(std::uint64_t seed, int k, double slope = 0.5,
                         double noise_scale = 1.0) {
    rng::Stream stream(seed, 0);
    std::vector<double> bx, sx, by, sy;
    for (int i = 0; i < k; ++i) {
        const double x = stream.normal(0.15, 0.05);
        const double s = 0.008 + 0.02 * stream.uniform01();
        bx.push_back(x == 0.0 ? 0.1 : x);
        sx.push_back(0.004 + 0.006 * stream.uniform01());
        by.push_back(slope * bx.back() + noise_scale * stream.normal(0.0, s));
        sy.push_back(s);
    }
    return synth::harmonized_from_arrays(bx, sx, by, sy);
}

}  // namespace

TEST_CASE("make_estimate derives OR, CI, and p consistently") {
    MrEstimate est = make_estimate(Method::ivw_random, 0.926, 0.281, 15, "caries", "lung");
    CHECK(est.or_point == doctest::Approx(2.5244).epsilon(2e-4));
    CHECK(est.or_ci_low == doctest::Approx(1.4554).epsilon(2e-4));
    CHECK(est.or_ci_high == doctest::Approx(4.3787).epsilon(2e-4));
    CHECK(est.or_point == std::exp(est.beta));
    CHECK(est.or_ci_low < est.or_point);
    CHECK(est.or_point < est.or_ci_high);
    CHECK(est.pvalue == stats::two_sided_normal_p(est.beta / est.se));
}

TEST_CASE("wald ratio: direct ratio, null outcome, undefined ratio") {
    MrEstimate est = wald_ratio(make_instrument(0.10, 0.01, 0.05, 0.01));
    CHECK(est.beta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(est.se == doctest::Approx(0.1).epsilon(1e-15));

    MrEstimate null_est = wald_ratio(make_instrument(0.25, 0.01, 0.0, 0.01));
    CHECK(null_est.beta == 0.0);

    CHECK_THROWS_WITH_AS(wald_ratio(make_instrument(0.0, 0.01, 0.05, 0.01)), "undefined ratio",
                         std::invalid_argument);
    Instrument dropped = make_instrument(0.1, 0.01, 0.05, 0.01);
    dropped.status = InstrumentStatus::dropped_palindromic;
    CHECK_THROWS(wald_ratio(dropped));
}

TEST_CASE("second-order Wald SE dominates the first-order SE (fuzz)") {
    rng::Stream stream(17, 0);
    for (int i = 0; i < 2000; ++i) {
        double bx = stream.normal(0.2, 0.2);
        if (bx == 0.0) bx = 0.1;
        Instrument inst = make_instrument(bx, 0.001 + 0.05 * stream.uniform01(),
                                          stream.normal(0.0, 0.3),
                                          0.001 + 0.05 * stream.uniform01());
        const double first = wald_ratio(inst, WaldSeOrder::first).se;
        const double second = wald_ratio(inst, WaldSeOrder::second).se;
        CHECK(second >= first);
        // the oracle form of the second-order term
        const double expected = std::sqrt(
            inst.se_outcome * inst.se_outcome / (bx * bx) +
            inst.beta_outcome * inst.beta_outcome * inst.se_exposure * inst.se_exposure /
                (bx * bx * bx * bx));
        CHECK(second == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("ivw: single kept instrument degrades to the wald ratio") {
    HarmonizedSet set = synth::harmonized_from_arrays({0.1}, {0.01}, {0.05}, {0.01});
    MrEstimate est = ivw(set, IvwMode::random_effect);
    CHECK(est.beta == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(est.se == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(est.n_snps == 1);
    CHECK_THROWS(ivw(synth::harmonized_from_arrays({}, {}, {}, {})));
}

TEST_CASE("ivw: perfectly proportional data recovers the slope with zero Q") {
    HarmonizedSet set = synth::harmonized_from_arrays(
        {0.1, 0.2, 0.3}, {0.01, 0.01, 0.01}, {0.05, 0.10, 0.15}, {0.01, 0.01, 0.01});
    MrEstimate est = ivw(set, IvwMode::fixed_effect);
    CHECK(est.beta == doctest::Approx(0.5).epsilon(1e-14));
    QResult q = cochran_q(set);
    CHECK(q.q == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(q.pvalue == 1.0);
    // multiplicative random effects floor at 1: same SE here
    MrEstimate random = ivw(set, IvwMode::random_effect);
    CHECK(random.se == doctest::Approx(est.se).epsilon(1e-15));
}

TEST_CASE("ivw matches the normal-equations oracle on random fixtures") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        HarmonizedSet set = random_set(seed, 20);
        EstimationInput input = estimation_input(set);
        std::vector<double> bx(input.beta_exposure.data(),
                               input.beta_exposure.data() + input.size());
        std::vector<double> by(input.beta_outcome.data(),
                               input.beta_outcome.data() + input.size());
        std::vector<double> sy(input.se_outcome.data(), input.se_outcome.data() + input.size());
        auto ref = oracle::ivw_sums(bx, by, sy);

        MrEstimate fixed = ivw(set, IvwMode::fixed_effect);
        CHECK(fixed.beta == doctest::Approx(ref.beta).epsilon(1e-10));
        CHECK(fixed.se == doctest::Approx(ref.se_fixed).epsilon(1e-10));

        MrEstimate random = ivw(set, IvwMode::random_effect);
        const double scale = std::sqrt(std::max(1.0, ref.q / (20.0 - 1.0)));
        CHECK(random.se == doctest::Approx(ref.se_fixed * scale).epsilon(1e-10));
    }
}

TEST_CASE("ivw beta equals the weighted mean of Wald ratios") {
    HarmonizedSet set = random_set(3, 15);
    EstimationInput input = estimation_input(set);
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < input.size(); ++i) {
        const double ratio = input.beta_outcome(i) / input.beta_exposure(i);
        const double w = input.beta_exposure(i) * input.beta_exposure(i) /
                         (input.se_outcome(i) * input.se_outcome(i));
        num += w * ratio;
        den += w;
    }
    MrEstimate est = ivw(set, IvwMode::fixed_effect);
    CHECK(est.beta == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("estimator invariances: permutation, orientation, scale") {
    HarmonizedSet set = random_set(8, 12);
    MrEstimate base_ivw = ivw(set, IvwMode::random_effect);
    EggerResult base_egger = egger(set);
    MrEstimate base_wm = weighted_median(set, 500, 11);

    // permutation
    HarmonizedSet permuted = set;
    std::reverse(permuted.instruments.begin(), permuted.instruments.end());
    CHECK(ivw(permuted, IvwMode::random_effect).beta == doctest::Approx(base_ivw.beta).epsilon(1e-12));
    CHECK(egger(permuted).slope.beta == doctest::Approx(base_egger.slope.beta).epsilon(1e-12));

    // joint sign flip of one instrument
    HarmonizedSet flipped = set;
    flipped.instruments[2].beta_exposure *= -1.0;
    flipped.instruments[2].beta_outcome *= -1.0;
    CHECK(ivw(flipped, IvwMode::random_effect).beta ==
          doctest::Approx(base_ivw.beta).epsilon(1e-12));
    CHECK(ivw(flipped, IvwMode::random_effect).se == doctest::Approx(base_ivw.se).epsilon(1e-12));
    CHECK(egger(flipped).slope.beta == doctest::Approx(base_egger.slope.beta).epsilon(1e-12));
    CHECK(egger(flipped).intercept.beta ==
          doctest::Approx(base_egger.intercept.beta).epsilon(1e-12));
    CHECK(weighted_median(flipped, 500, 11).beta == doctest::Approx(base_wm.beta).epsilon(1e-12));

    // scale equivariance: c * outcome scales beta and se by c
    const double c = 3.5;
    HarmonizedSet scaled = set;
    for (auto& inst : scaled.instruments) {
        inst.beta_outcome *= c;
        inst.se_outcome *= c;
    }
    MrEstimate scaled_ivw = ivw(scaled, IvwMode::random_effect);
    CHECK(scaled_ivw.beta == doctest::Approx(c * base_ivw.beta).epsilon(1e-12));
    CHECK(scaled_ivw.se == doctest::Approx(c * base_ivw.se).epsilon(1e-12));
}

TEST_CASE("egger: exact recovery on noiseless linear fixtures") {
    std::vector<double> bx, sx, by, sy;
    for (int i = 1; i <= 8; ++i) {
        bx.push_back(0.05 * i);
        sx.push_back(0.005);
        by.push_back(0.02 + 0.5 * 0.05 * i);
        sy.push_back(0.01);
    }
    HarmonizedSet set = synth::harmonized_from_arrays(bx, sx, by, sy);
    EggerResult result = egger(set);
    CHECK(result.intercept.beta == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(result.slope.beta == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS(egger(synth::harmonized_from_arrays({0.1, 0.2}, {0.01, 0.01}, {0.05, 0.1},
                                                     {0.01, 0.01})));
}

TEST_CASE("egger matches the two-parameter WLS oracle on random fixtures") {
    for (std::uint64_t seed = 100; seed < 115; ++seed) {
        HarmonizedSet set = random_set(seed, 15);
        // oracle computes on the same pre-flipped orientation
        EstimationInput input = estimation_input(set);
        std::vector<double> xs, ys, ws;
        for (Eigen::Index i = 0; i < input.size(); ++i) {
            double x = input.beta_exposure(i);
            double y = input.beta_outcome(i);
            if (x < 0.0) {
                x = -x;
                y = -y;
            }
            xs.push_back(x);
            ys.push_back(y);
            ws.push_back(1.0 / (input.se_outcome(i) * input.se_outcome(i)));
        }
        auto ref = oracle::wls_line_moments(xs, ys, ws);
        const double scale = std::sqrt(std::max(1.0, ref.rss_w / (15.0 - 2.0)));
        EggerResult result = egger(set);
        CHECK(result.slope.beta == doctest::Approx(ref.slope).epsilon(1e-10));
        CHECK(result.intercept.beta == doctest::Approx(ref.intercept).epsilon(1e-10));
        CHECK(result.slope.se == doctest::Approx(ref.se_slope * scale).epsilon(1e-10));
        CHECK(result.intercept.se == doctest::Approx(ref.se_intercept * scale).epsilon(1e-10));
    }
}

TEST_CASE("egger with the intercept constrained to zero reproduces fixed IVW") {
    // fitting y = b*x with the same weights: drop the intercept column
    HarmonizedSet set = random_set(9, 18);
    EstimationInput input = estimation_input(set);
    Eigen::VectorXd bx = input.beta_exposure, by = input.beta_outcome;
    for (Eigen::Index i = 0; i < input.size(); ++i) {
        if (bx(i) < 0.0) {
            bx(i) = -bx(i);
            by(i) = -by(i);
        }
    }
    Eigen::VectorXd w = input.se_outcome.array().square().inverse();
    auto constrained = stats::wls_origin(bx, by, w);
    MrEstimate fixed = ivw(set, IvwMode::fixed_effect);
    CHECK(constrained.beta == doctest::Approx(fixed.beta).epsilon(1e-12));
    CHECK(constrained.se == doctest::Approx(fixed.se).epsilon(1e-12));
}

TEST_CASE("egger intercept/p pair has the reported no-pleiotropy shape") {
    // the arithmetic the verdict rests on: z = -0.003/0.0281 gives p ~ 0.915
    CHECK(stats::two_sided_normal_p(-0.003 / 0.0281) == doctest::Approx(0.915).epsilon(2e-4));
    // a near-null intercept fixture must produce a high intercept p
    std::vector<double> bx, sx, by, sy;
    rng::Stream stream(200, 0);
    for (int i = 0; i < 15; ++i) {
        bx.push_back(0.08 + 0.01 * i);
        sx.push_back(0.005);
        by.push_back(-0.003 + 0.9 * bx.back() + stream.normal(0.0, 0.02));
        sy.push_back(0.02);
    }
    EggerResult result = egger(synth::harmonized_from_arrays(bx, sx, by, sy));
    CHECK(result.intercept.pvalue ==
          stats::two_sided_normal_p(result.intercept.beta / result.intercept.se));
    CHECK(result.intercept.pvalue > 0.05);  // no-pleiotropy verdict
}

TEST_CASE("weighted median: equal weights take the middle element") {
    // ratios 0.2, 0.5, 0.9 with equal weights
    HarmonizedSet set = synth::harmonized_from_arrays(
        {0.1, 0.1, 0.1}, {0.01, 0.01, 0.01}, {0.02, 0.05, 0.09}, {0.01, 0.01, 0.01});
    MrEstimate est = weighted_median(set, 500, 1);
    CHECK(est.beta == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS(weighted_median(set, 50, 1));  // n_boot too small
}

TEST_CASE("weighted median shrugs off a minority of wild outliers") {
    // 3 valid ratios near 0.5, 2 pleiotropic ones far away
    HarmonizedSet set = synth::harmonized_from_arrays(
        {0.10, 0.12, 0.14, 0.10, 0.11},
        {0.01, 0.01, 0.01, 0.01, 0.01},
        {0.048, 0.062, 0.071, 0.50, -0.40},
        {0.01, 0.01, 0.01, 0.01, 0.01});
    MrEstimate est = weighted_median(set, 1000, 5);
    std::vector<double> valid_ratios = {0.048 / 0.10, 0.062 / 0.12, 0.071 / 0.14};
    CHECK(est.beta >= *std::min_element(valid_ratios.begin(), valid_ratios.end()));
    CHECK(est.beta <= *std::max_element(valid_ratios.begin(), valid_ratios.end()));
}

TEST_CASE("weighted median point equals the cumulative-scan oracle (fuzz)") {
    rng::Stream stream(300, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const int k = 3 + static_cast<int>(stream.bounded(20));
        std::vector<double> ratios(k), weights(k);
        for (int i = 0; i < k; ++i) {
            ratios[i] = stream.normal(0.5, 1.0);
            weights[i] = 0.01 + stream.uniform01();
        }
        const double mine = weighted_median_point(ratios, weights);
        const double ref = oracle::weighted_median_scan(ratios, weights);
        CHECK(mine == doctest::Approx(ref).epsilon(1e-12));
        CHECK(mine >= *std::min_element(ratios.begin(), ratios.end()));
        CHECK(mine <= *std::max_element(ratios.begin(), ratios.end()));
    }
}

TEST_CASE("weighted median bootstrap SE is bit-identical across runs and threads") {
    HarmonizedSet set = random_set(77, 12);
    MrEstimate a = weighted_median(set, 1000, 42, 1);
    MrEstimate b = weighted_median(set, 1000, 42, 1);
    MrEstimate c = weighted_median(set, 1000, 42, 4);
    CHECK(a.se == b.se);
    CHECK(a.se == c.se);
    CHECK(a.beta == c.beta);
    MrEstimate other_seed = weighted_median(set, 1000, 43, 1);
    CHECK(other_seed.se != a.se);
}

TEST_CASE("mvmr: inert second exposure reproduces univariable IVW") {
    HarmonizedSet set = random_set(55, 16);
    EstimationInput input = estimation_input(set);
    MvmrInput mv;
    mv.rsids = input.rsids;
    mv.exposure_ids = {"x1", "x2"};
    mv.outcome_id = "y";
    mv.beta_exposures.resize(input.size(), 2);
    mv.beta_exposures.col(0) = input.beta_exposure;
    mv.beta_exposures.col(1).setZero();
    mv.beta_outcome = input.beta_outcome;
    mv.se_outcome = input.se_outcome;
    auto estimates = mvmr(mv, IvwMode::fixed_effect);
    REQUIRE(estimates.size() == 2);
    MrEstimate uni = ivw(set, IvwMode::fixed_effect);
    CHECK(estimates[0].beta == doctest::Approx(uni.beta).epsilon(1e-12));
    CHECK(estimates[0].se == doctest::Approx(uni.se).epsilon(1e-12));
    CHECK(estimates[1].beta == 0.0);
    CHECK(estimates[1].pvalue == 1.0);
}

TEST_CASE("mvmr with a single exposure equals ivw in both modes") {
    HarmonizedSet set = random_set(56, 14);
    EstimationInput input = estimation_input(set);
    MvmrInput mv;
    mv.rsids = input.rsids;
    mv.exposure_ids = {"x1"};
    mv.outcome_id = "y";
    mv.beta_exposures.resize(input.size(), 1);
    mv.beta_exposures.col(0) = input.beta_exposure;
    mv.beta_outcome = input.beta_outcome;
    mv.se_outcome = input.se_outcome;
    for (IvwMode mode : {IvwMode::fixed_effect, IvwMode::random_effect}) {
        auto estimates = mvmr(mv, mode);
        MrEstimate uni = ivw(set, mode);
        CHECK(estimates[0].beta == doctest::Approx(uni.beta).epsilon(1e-12));
        CHECK(estimates[0].se == doctest::Approx(uni.se).epsilon(1e-12));
    }
}

TEST_CASE("mvmr matches the multivariate normal-equations oracle") {
    rng::Stream stream(404, 0);
    for (int rep = 0; rep < 15; ++rep) {
        const int n = 25;
        MvmrInput mv;
        mv.exposure_ids = {"x1", "x2", "x3"};
        mv.outcome_id = "y";
        mv.beta_exposures.resize(n, 3);
        mv.beta_outcome.resize(n);
        mv.se_outcome.resize(n);
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) {
            mv.rsids.push_back("rs" + std::to_string(i));
            for (int j = 0; j < 3; ++j) mv.beta_exposures(i, j) = stream.normal(0.1, 0.2);
            mv.se_outcome(i) = 0.01 + 0.02 * stream.uniform01();
            mv.beta_outcome(i) = 0.4 * mv.beta_exposures(i, 0) -
                                 0.2 * mv.beta_exposures(i, 1) +
                                 stream.normal(0.0, mv.se_outcome(i));
            w(i) = 1.0 / (mv.se_outcome(i) * mv.se_outcome(i));
        }
        auto ref = oracle::wls_normal_equations(mv.beta_exposures, mv.beta_outcome, w);
        auto estimates = mvmr(mv, IvwMode::fixed_effect);
        for (int j = 0; j < 3; ++j) {
            CHECK(estimates[static_cast<std::size_t>(j)].beta ==
                  doctest::Approx(ref.beta(j)).epsilon(1e-9));
            CHECK(estimates[static_cast<std::size_t>(j)].se ==
                  doctest::Approx(ref.se(j)).epsilon(1e-9));
        }
    }
}

TEST_CASE("mvmr rejects collinear nonzero exposures and tiny instrument counts") {
    MvmrInput mv;
    mv.exposure_ids = {"x1", "x2"};
    mv.outcome_id = "y";
    const int n = 10;
    mv.beta_exposures.resize(n, 2);
    mv.beta_outcome.resize(n);
    mv.se_outcome.resize(n);
    for (int i = 0; i < n; ++i) {
        mv.rsids.push_back("rs" + std::to_string(i));
        mv.beta_exposures(i, 0) = 0.1 + 0.01 * i;
        mv.beta_exposures(i, 1) = 2.0 * mv.beta_exposures(i, 0);
        mv.beta_outcome(i) = 0.05;
        mv.se_outcome(i) = 0.01;
    }
    CHECK_THROWS_WITH_AS(mvmr(mv), "collinear exposures", std::invalid_argument);

    MvmrInput tiny = mv;
    tiny.beta_exposures.conservativeResize(2, 2);
    tiny.beta_outcome.conservativeResize(2);
    tiny.se_outcome.conservativeResize(2);
    tiny.rsids.resize(2);
    CHECK_THROWS(mvmr(tiny));
}

TEST_CASE("mvmr adjusts away a height-style confounded pathway") {
    // planted: outcome = -0.3*lungfn + 0.25*height; the two exposures share
    // instruments, so univariable lung-function MR is biased but MVMR is not
    rng::Stream stream(888, 0);
    const int n = 60;
    MvmrInput mv;
    mv.exposure_ids = {"lung_function", "height"};
    mv.outcome_id = "lung_cancer";
    mv.beta_exposures.resize(n, 2);
    mv.beta_outcome.resize(n);
    mv.se_outcome.resize(n);
    std::vector<double> bx, sx, by, sy;
    for (int i = 0; i < n; ++i) {
        mv.rsids.push_back("rs" + std::to_string(i));
        const double lf = stream.normal(0.15, 0.05);
        const double ht = 0.5 * lf + stream.normal(0.0, 0.04);  // correlated columns
        mv.beta_exposures(i, 0) = lf;
        mv.beta_exposures(i, 1) = ht;
        mv.se_outcome(i) = 0.01;
        mv.beta_outcome(i) = -0.3 * lf + 0.25 * ht + stream.normal(0.0, 0.01);
        bx.push_back(lf);
        sx.push_back(0.005);
        by.push_back(mv.beta_outcome(i));
        sy.push_back(0.01);
    }
    MrEstimate uni = ivw(synth::harmonized_from_arrays(bx, sx, by, sy), IvwMode::fixed_effect);
    auto joint = mvmr(mv, IvwMode::fixed_effect);
    // univariable soaks up part of the height path; MVMR recovers the truth
    CHECK(std::abs(uni.beta - (-0.3)) > 0.05);
    CHECK(joint[0].beta == doctest::Approx(-0.3).epsilon(0.1));
    CHECK(joint[0].pvalue < 0.05);
    CHECK(joint[0].beta < 0.0);
}

TEST_CASE("mvmr_align orients exposures onto the outcome alleles") {
    std::vector<SummaryRecord> outcome = {
        synth::record("rs1", "1", 100, 'A', 'G', 0.3, 0.06, 0.01),
        synth::record("rs2", "1", 200, 'C', 'T', 0.4, -0.02, 0.01),
        synth::record("rs3", "1", 300, 'A', 'T', 0.49, 0.01, 0.01),   // ambiguous palindrome
        synth::record("rs4", "1", 400, 'A', 'G', 0.3, 0.03, 0.01)};
    std::vector<SummaryRecord> exposure1 = {
        synth::record("rs1", "1", 100, 'G', 'A', 0.7, -0.12, 0.01),  // swapped orientation
        synth::record("rs2", "1", 200, 'A', 'G', 0.6, 0.08, 0.01),   // strand complement + swap
        synth::record("rs3", "1", 300, 'A', 'T', 0.51, 0.05, 0.01),
        synth::record("rs4", "1", 400, 'A', 'G', 0.3, 0.10, 0.01)};
    std::vector<SummaryRecord> exposure2 = {
        synth::record("rs1", "1", 100, 'A', 'G', 0.3, 0.05, 0.01),
        synth::record("rs2", "1", 200, 'C', 'T', 0.4, 0.04, 0.01),
        synth::record("rs4", "1", 400, 'A', 'G', 0.3, 0.02, 0.01)};
    MvmrInput input = mvmr_align({exposure1, exposure2}, outcome, 0.08, {"x1", "x2"}, "y");
    // rs3 dropped (palindromic near 0.5); the rest survive
    REQUIRE(input.rsids == std::vector<std::string>{"rs1", "rs2", "rs4"});
    CHECK(input.beta_exposures(0, 0) == doctest::Approx(0.12));   // flipped
    CHECK(input.beta_exposures(1, 0) == doctest::Approx(-0.08));  // complement+swap flips
    CHECK(input.beta_exposures(2, 0) == doctest::Approx(0.10));
    CHECK(input.beta_exposures(0, 1) == doctest::Approx(0.05));
}
