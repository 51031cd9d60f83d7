#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sdgzsl {

/// SplitMix64 (Steele, Lea & Flood). All randomness in the library flows
/// through this generator so datasets and initializations are reproducible
/// bit-for-bit in any language that implements the same three routines:
///
///   next():    state += 0x9E3779B97F4A7C15; z = state;
///              z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///              z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
///              return z ^ (z >> 31)
///   uniform(): (next() >> 11) * 2^-53, in [0, 1)
///   normal():  Box-Muller, cosine branch only:
///              u1 = 1 - uniform(); u2 = uniform();
///              sqrt(-2 ln u1) * cos(2 pi u2)
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform index in [0, n). Modulo reduction; bias is negligible for n << 2^64.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace sdgzsl
