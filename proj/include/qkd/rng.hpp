#pragma once

#include <cstdint>
#include <random>

namespace qkd {

using Rng = std::mt19937_64;

/// Independent stream for job `index` of a run seeded with `seed`.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x51ed270bU};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

inline int random_bit(Rng& rng) { return static_cast<int>(rng() >> 63); }

}  // namespace qkd
