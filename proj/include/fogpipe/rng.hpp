#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace fogpipe::rng {

// All randomness in the project flows through these helpers so that a run is
// reproducible bit-for-bit from a single global seed. std::mt19937_64 output
// is fully specified by the standard; the distribution transforms below are
// hand-rolled because the std::*_distribution algorithms are
// implementation-defined and would break cross-toolchain determinism.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-module seed = mix of the global seed with an FNV-1a hash of the module
// name. Stable across platforms; documented so other implementations can
// reproduce the derivation.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return splitmix64(global_seed ^ h);
}

// Uniform in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Box-Muller; consumes exactly two draws per call, spare discarded.
inline double gaussian(std::mt19937_64& gen, double mean, double stddev) {
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    // Avoid log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * mag * std::cos(2.0 * M_PI * u2);
}

// Exponential with the given mean, by inversion.
inline double exponential(std::mt19937_64& gen, double mean) {
    double u = uniform01(gen);
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return -mean * std::log1p(-u);
}

} // namespace fogpipe::rng
