#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace anovakrr {

// All seeded randomness goes through std::mt19937_64, whose output sequence
// is fixed by the C++ standard. The bounded-integer and shuffle routines below
// are written out by hand because std::uniform_int_distribution and
// std::shuffle are implementation-defined.
inline constexpr const char* kRngName = "mt19937_64/lemire-rejection/fisher-yates";
inline constexpr int kRngVersion = 1;

using Rng = std::mt19937_64;

// Uniform integer in [0, bound), unbiased (Lemire's multiply-and-reject).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

// Uniform double in [0, 1) built from the top 53 bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on top of uniform_unit; the second variate is discarded so the
// draw count per call is fixed.
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double u1 = 1.0 - uniform_unit(rng);  // (0, 1]
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
  shuffle(std::span<T>(values), rng);
}

}  // namespace anovakrr
