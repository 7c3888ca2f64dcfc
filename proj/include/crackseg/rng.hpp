#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace crackseg {

// mt19937_64's output sequence is fixed by the standard, the std
// distributions are not; these helpers keep seeded results identical
// across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n), n > 0 (rejection sampling, no modulo bias).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - Rng::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform_unit(rng) < p; }

/// Standard normal by Box-Muller (one draw per call, two uniforms).
inline double standard_normal(Rng& rng) {
  const double u = 1.0 - uniform_unit(rng);  // (0, 1]
  const double v = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

}  // namespace crackseg
