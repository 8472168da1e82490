#pragma once

#include <cstdint>
#include <random>

#include "fqr/stats.hpp"

namespace fqr {

/// Stateless splitmix64 scramble, used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic per-replication seed from (base seed, experiment size, index).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(splitmix64(base) ^ a) ^ b);
}

/// Uniform draw in the open interval (0,1); never returns an endpoint, so the
/// result is always a valid quantile-function argument.
inline double uniform01(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw via inverse-CDF sampling. Slower than Box-Muller but
/// consumes exactly one engine word per draw, which keeps streams reproducible
/// regardless of call pattern.
inline double standard_normal(std::mt19937_64& rng) {
    return normal_quantile(uniform01(rng));
}

} // namespace fqr
