#pragma once

// Deterministic randomness. Every stochastic path (scenario generation,
// Monte Carlo validators, sweep seeds) draws from mt19937_64 through the
// helpers below instead of std distributions, whose output is
// implementation-defined. Same seed, same bytes, on every platform.

#include <cstdint>
#include <random>

namespace gcibn::rng {

using Engine = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double unit(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * unit(eng);
}

// Uniform integer in [0, n).
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
    // Rejection-free modulo is fine here; n is small against 2^64.
    return eng() % n;
}

// Derive an independent stream seed, e.g. one per Monte Carlo batch or
// sweep repetition (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace gcibn::rng
