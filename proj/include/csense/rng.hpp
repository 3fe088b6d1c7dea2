#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace csense {

/// splitmix64 mixing step; used to derive independent per-trial seeds from
/// (base seed, trial index) so results do not depend on worker count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Deterministic random stream. std::mt19937_64 supplies the raw 64-bit words
/// (its output sequence is pinned by the standard); the floating-point
/// mappings are implemented here so every drawn double is reproducible
/// bit-for-bit across platforms and library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1): 53 random bits scaled by 2^-53.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); never returns 0, so -log(u) is finite.
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
    }

    /// Exponential variate with the given rate (> 0); always strictly positive.
    double exponential(double rate) { return -std::log(uniform_open01()) / rate; }

private:
    std::mt19937_64 eng_;
};

/// Stream for trial `index` under `base_seed`. Distinct indices give
/// decorrelated streams; the mapping is pure, so trials can be generated in
/// any order (or on any worker) with identical results.
inline RngStream make_trial_stream(std::uint64_t base_seed, std::uint64_t index) {
    return RngStream(splitmix64(base_seed + 0x9E3779B97F4A7C15ULL * (index + 1)));
}

} // namespace csense
