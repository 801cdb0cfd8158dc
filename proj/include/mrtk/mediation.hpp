// Two-step mediation arithmetic (indirect effect, delta-method SE, bootstrap
// CI, mediation proportion) and NCP-based statistical power.
#pragma once

#include "mrtk/estimators.hpp"

#include <cstdint>
#include <optional>

namespace mrtk {

enum class CiMethod { delta, bootstrap };

std::string to_string(CiMethod method);
CiMethod ci_method_from_string(const std::string& text);

struct MediationResult {
    double total_beta = 0.0;
    double step1_beta = 0.0;
    double step1_se = 0.0;
    double step2_beta = 0.0;
    double step2_se = 0.0;
    double indirect = 0.0;     // step1_beta * step2_beta
    double indirect_se = 0.0;  // first-order delta SE, always reported
    double ci_low = 0.0;
    double ci_high = 0.0;
    double proportion = 0.0;  // indirect / total_beta
    CiMethod ci_method = CiMethod::delta;
    std::optional<int> n_boot;
    std::optional<std::uint64_t> seed;
    bool significant = false;       // CI excludes zero
    bool proportion_warning = false;  // proportion negative or above 1
};

// Delta CI: indirect +- 1.959964 * sqrt(b1^2 se2^2 + b2^2 se1^2).
// Bootstrap CI: percentile interval of n_boot seeded normal resamples of
// (b1, b2). Throws "undefined proportion" when total.beta == 0.
MediationResult mediate(const MrEstimate& total, const MrEstimate& step1,
                        const MrEstimate& step2, CiMethod ci_method = CiMethod::bootstrap,
                        int n_boot = 10000, std::uint64_t seed = 0);

struct PowerInput {
    std::int64_t n_outcome = 0;
    std::optional<double> case_fraction;  // set for binary outcomes
    double r2_instruments = 0.0;          // variance in exposure explained
    double beta_causal = 0.0;             // hypothesized log-OR per SD
    double alpha = 0.05;
};

struct PowerResult {
    double ncp = 0.0;
    double power = 0.0;
};

// NCP = n * r2 * beta^2 [* cf*(1-cf) for binary outcomes];
// power = 1 - Phi(z_{1-a/2} - sqrt(NCP)) + Phi(-z_{1-a/2} - sqrt(NCP)).
// An approximation: the exact formula behind the paper's power claim is not
// recoverable from summary data.
PowerResult power_ncp(const PowerInput& input);

}  // namespace mrtk
