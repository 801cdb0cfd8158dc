#include "mrtk/mediation.hpp"

#include "mrtk/rng.hpp"
#include "mrtk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mrtk {

std::string to_string(CiMethod method) {
    return method == CiMethod::delta ? "delta" : "bootstrap";
}

CiMethod ci_method_from_string(const std::string& text) {
    if (text == "delta") return CiMethod::delta;
    if (text == "bootstrap") return CiMethod::bootstrap;
    throw std::invalid_argument("unknown CI method: " + text);
}

MediationResult mediate(const MrEstimate& total, const MrEstimate& step1,
                        const MrEstimate& step2, CiMethod ci_method, int n_boot,
                        std::uint64_t seed) {
    if (!(step1.se > 0.0) || !(step2.se > 0.0))
        throw std::invalid_argument("mediate: step estimates need positive SEs");
    if (total.beta == 0.0) throw std::invalid_argument("undefined proportion");

    MediationResult result;
    result.total_beta = total.beta;
    result.step1_beta = step1.beta;
    result.step1_se = step1.se;
    result.step2_beta = step2.beta;
    result.step2_se = step2.se;
    result.indirect = step1.beta * step2.beta;
    result.indirect_se = std::sqrt(step1.beta * step1.beta * step2.se * step2.se +
                                   step2.beta * step2.beta * step1.se * step1.se);
    result.proportion = result.indirect / total.beta;
    result.ci_method = ci_method;

    if (ci_method == CiMethod::delta) {
        result.ci_low = result.indirect - stats::kCi95Z * result.indirect_se;
        result.ci_high = result.indirect + stats::kCi95Z * result.indirect_se;
    } else {
        if (n_boot < 100) throw std::invalid_argument("mediate: n_boot must be >= 100");
        result.n_boot = n_boot;
        result.seed = seed;
        const std::uint64_t boot_seed = rng::derive_seed(seed, "mediation");
        std::vector<double> products(static_cast<std::size_t>(n_boot));
        for (int b = 0; b < n_boot; ++b) {
            rng::Stream stream(boot_seed, static_cast<std::uint64_t>(b));
            const double b1 = stream.normal(step1.beta, step1.se);
            const double b2 = stream.normal(step2.beta, step2.se);
            products[static_cast<std::size_t>(b)] = b1 * b2;
        }
        std::sort(products.begin(), products.end());
        // percentile bounds at 2.5% / 97.5% (nearest-rank with interpolation)
        auto percentile = [&](double q) {
            const double pos = q * (static_cast<double>(products.size()) - 1.0);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, products.size() - 1);
            const double t = pos - static_cast<double>(lo);
            return products[lo] + t * (products[hi] - products[lo]);
        };
        result.ci_low = percentile(0.025);
        result.ci_high = percentile(0.975);
    }

    result.significant = result.ci_low > 0.0 || result.ci_high < 0.0;
    result.proportion_warning = result.proportion < 0.0 || result.proportion > 1.0;
    return result;
}

PowerResult power_ncp(const PowerInput& input) {
    if (input.n_outcome < 1) throw std::invalid_argument("power_ncp: n_outcome must be >= 1");
    if (!(input.r2_instruments > 0.0 && input.r2_instruments < 1.0))
        throw std::invalid_argument("power_ncp: r2_instruments must lie in (0,1)");
    if (!(input.alpha > 0.0 && input.alpha < 1.0))
        throw std::invalid_argument("power_ncp: alpha must lie in (0,1)");
    if (input.case_fraction && !(*input.case_fraction > 0.0 && *input.case_fraction < 1.0))
        throw std::invalid_argument("power_ncp: case_fraction must lie in (0,1)");

    PowerResult result;
    result.ncp = static_cast<double>(input.n_outcome) * input.r2_instruments *
                 input.beta_causal * input.beta_causal;
    if (input.case_fraction)
        result.ncp *= *input.case_fraction * (1.0 - *input.case_fraction);
    const double z = stats::normal_quantile(1.0 - input.alpha / 2.0);
    const double root = std::sqrt(result.ncp);
    result.power = 1.0 - stats::normal_cdf(z - root) + stats::normal_cdf(-z - root);
    result.power = std::clamp(result.power, 0.0, 1.0);
    return result;
}

}  // namespace mrtk
