#pragma once

#include <cstdint>
#include <random>

namespace ribodesign {

using Rng = std::mt19937_64;

/// splitmix64 finaliser; derives independent stream seeds from a run seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) { return Rng(derive_seed(seed, stream)); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

template <typename Int>
Int uniform_int(Rng& rng, Int lo, Int hi) {
    return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

}  // namespace ribodesign
