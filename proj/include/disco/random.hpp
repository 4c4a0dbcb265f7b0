#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace disco {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Multiply-shift reduction; portable across
/// standard libraries, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle(std::span<T> v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  shuffle(std::span<T>(v), rng);
}

}  // namespace disco
