#pragma once

#include <cstdint>
#include <random>

namespace sfl {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for stream `index` of `seed`; independent of how work is scheduled.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t salt = 0) {
  return mix64(mix64(seed ^ mix64(salt)) + index);
}

using Rng = std::mt19937_64;

}  // namespace sfl
