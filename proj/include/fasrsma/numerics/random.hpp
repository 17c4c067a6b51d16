#pragma once

#include <cstdint>
#include <random>

namespace fasrsma::numerics {

/// SplitMix64 finalizer. Used to derive independent, reproducible seeds for
/// sub-streams (QMC shifts, Monte-Carlo batches) from one user seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t domain = 0) noexcept {
    return splitmix64(splitmix64(seed ^ splitmix64(domain)) + stream);
}

using Engine = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits. Unlike
/// std::uniform_real_distribution the mapping is fixed, so streams are
/// identical across standard-library implementations.
inline double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in the open interval (0, 1).
inline double uniform_open01(Engine& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace fasrsma::numerics
