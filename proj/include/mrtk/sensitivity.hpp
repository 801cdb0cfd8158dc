// Heterogeneity and pleiotropy diagnostics: Cochran's Q, the MR-PRESSO
// global/outlier/distortion simulation tests, and leave-one-out IVW.
#pragma once

#include "mrtk/estimators.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mrtk {

struct QResult {
    double q = 0.0;
    int df = 0;
    double pvalue = 1.0;
};

// Q = sum w_i (ratio_i - beta_ivw)^2 with w_i = (b_exp,i / se_out,i)^2,
// chi-square(k-1) under homogeneity.
QResult cochran_q(const HarmonizedSet& set);
QResult cochran_q(const EstimationInput& input);

struct PressoOptions {
    int n_sim = 5000;
    double outlier_alpha = 0.05;  // Bonferroni-adjusted across instruments
    std::uint64_t seed = 0;
    int n_distortion = 1000;  // random same-size subset removals forming the null
    unsigned threads = 1;
};

struct PressoReport {
    double global_rss_observed = 0.0;
    double global_pvalue = 1.0;
    std::vector<std::pair<std::string, double>> per_snp;  // (rsid, outlier p)
    std::vector<std::string> outliers;
    double beta_before = 0.0;
    double beta_after = 0.0;
    std::optional<double> distortion_pvalue;  // present iff outliers nonempty
    int n_sim = 0;
    std::uint64_t seed = 0;
};

// Global test: leave-one-out expected outcome betas define weighted residuals;
// the observed RSS is ranked against n_sim parametric simulations. Outliers
// are instruments whose simulated residual exceedance p satisfies p*k < alpha.
// The distortion null removes random outlier-sized subsets of non-outliers.
// All simulated p-values use the (count+1)/(n+1) estimator. Deterministic for
// fixed (seed, n_sim) at any thread count.
PressoReport presso(const HarmonizedSet& set, const PressoOptions& options);
PressoReport presso(const EstimationInput& input, const PressoOptions& options);

// IVW recomputed excluding each kept instrument in turn.
std::vector<std::pair<std::string, MrEstimate>> leave_one_out(
    const HarmonizedSet& set, IvwMode mode = IvwMode::random_effect);
std::vector<std::pair<std::string, MrEstimate>> leave_one_out(
    const EstimationInput& input, IvwMode mode, std::string exposure_id = {},
    std::string outcome_id = {});

DelimitedTable loo_table(std::span<const std::pair<std::string, MrEstimate>> rows,
                         char delimiter = '\t');

}  // namespace mrtk
