// Deterministic random streams. Simulation loops key one stream per iteration
// off (seed, stream index) so results do not depend on thread scheduling.
// mt19937_64 output is pinned by the standard; the uniform->normal transform
// is hand-rolled because std::normal_distribution is implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mrtk::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable 64-bit seed for a named consumer of a user seed (FNV-1a over label).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    std::uint64_t s = seed ^ h;
    return splitmix64(s);
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s ^= 0x632be59bd9b4e019ULL + stream_index * 0x9e3779b97f4a7c15ULL;
        std::uint64_t b = splitmix64(s);
        eng_.seed(a ^ (b + stream_index));
    }

    // uniform in (0,1); never 0 or 1, safe under log()
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1p-53;
    }

    // Box-Muller (cosine branch), two uniforms per draw, no cached state.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // unbiased integer in [0, n) by rejection
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace mrtk::rng
