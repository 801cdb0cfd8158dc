// Causal-effect estimators over a harmonized instrument set: per-SNP Wald
// ratios, IVW (fixed/multiplicative-random), MR-Egger, weighted median, and
// multivariable MR.
#pragma once

#include "mrtk/harmonize.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mrtk {

enum class Method {
    wald,
    ivw_fixed,
    ivw_random,
    egger,
    egger_intercept,
    weighted_median,
    mvmr,
};

std::string to_string(Method method);
Method method_from_string(const std::string& text);

struct MrEstimate {
    Method method = Method::wald;
    double beta = 0.0;
    double se = 0.0;
    double pvalue = 1.0;
    double or_point = 1.0;
    double or_ci_low = 1.0;
    double or_ci_high = 1.0;
    int n_snps = 0;
    std::string exposure_id;
    std::string outcome_id;
};

// Fills or/ci/p from beta and se (two-sided normal, 1.959964 multiplier).
MrEstimate make_estimate(Method method, double beta, double se, int n_snps,
                         std::string exposure_id = {}, std::string outcome_id = {});

// Kept instruments flattened into Eigen vectors for the regression kernels.
struct EstimationInput {
    std::vector<std::string> rsids;
    Eigen::VectorXd beta_exposure;
    Eigen::VectorXd se_exposure;
    Eigen::VectorXd beta_outcome;
    Eigen::VectorXd se_outcome;

    Eigen::Index size() const { return beta_exposure.size(); }
};

EstimationInput estimation_input(const HarmonizedSet& set);

enum class IvwMode { fixed_effect, random_effect };
enum class WaldSeOrder { first, second };

// beta = b_out/b_exp; first-order se = se_out/|b_exp|, second-order adds the
// exposure-uncertainty term. Throws "undefined ratio" on b_exp == 0.
MrEstimate wald_ratio(const Instrument& inst, WaldSeOrder order = WaldSeOrder::first,
                      std::string exposure_id = {}, std::string outcome_id = {});

// WLS of b_out on b_exp through the origin, weights 1/se_out^2. Random mode
// inflates se by max(1, sqrt(Q/(k-1))). A single instrument degrades to the
// Wald ratio.
MrEstimate ivw(const HarmonizedSet& set, IvwMode mode = IvwMode::random_effect);
MrEstimate ivw(const EstimationInput& input, IvwMode mode, std::string exposure_id = {},
               std::string outcome_id = {});

struct EggerResult {
    MrEstimate slope;
    MrEstimate intercept;  // the pleiotropy test
};

// Weighted regression with free intercept after flipping instruments to
// non-negative exposure betas; residual variance floored at 1.
EggerResult egger(const HarmonizedSet& set);
EggerResult egger(const EstimationInput& input, std::string exposure_id = {},
                  std::string outcome_id = {});

// Interpolated weighted median of the Wald ratios; SE from a seeded
// parametric bootstrap (deterministic for fixed seed and any thread count).
MrEstimate weighted_median(const HarmonizedSet& set, int n_boot = 1000, std::uint64_t seed = 0,
                           unsigned threads = 1);
MrEstimate weighted_median(const EstimationInput& input, int n_boot, std::uint64_t seed,
                           unsigned threads = 1, std::string exposure_id = {},
                           std::string outcome_id = {});

// exposed for the sensitivity module and tests
double weighted_median_point(std::span<const double> ratios, std::span<const double> weights);

// ---------------------------------------------------------------------------
// Multivariable MR
// ---------------------------------------------------------------------------

struct MvmrInput {
    std::vector<std::string> rsids;
    std::vector<std::string> exposure_ids;     // one per column
    std::string outcome_id;
    Eigen::MatrixXd beta_exposures;            // n_snps x k
    Eigen::VectorXd beta_outcome;
    Eigen::VectorXd se_outcome;
};

// Joint WLS of b_out on all exposure-beta columns, no intercept, weights
// 1/se_out^2. Exposure columns that are identically zero are inert: they take
// beta 0 with infinite se instead of poisoning the solve. Rank deficiency
// among the remaining columns throws "collinear exposures".
std::vector<MrEstimate> mvmr(const MvmrInput& input, IvwMode mode = IvwMode::fixed_effect);

// Aligns k exposure studies and one outcome on the shared variants, oriented
// to the outcome's alleles; palindromic variants obey the same EAF window
// rule as harmonize().
MvmrInput mvmr_align(const std::vector<std::vector<SummaryRecord>>& exposures,
                     std::span<const SummaryRecord> outcome, double palindrome_eaf_window,
                     std::vector<std::string> exposure_ids = {}, std::string outcome_id = {});

}  // namespace mrtk
