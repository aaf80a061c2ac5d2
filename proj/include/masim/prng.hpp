// prng.hpp - deterministic random number generation.
//
// Everything random in this project flows through the SplitMix64 finalizer
// below, either as a sequential stream (Prng) or as a stateless keyed field
// (noise addressed by role and index). No std::<distribution> is used, so
// results are bit-identical across standard libraries and platforms.
// Generator version: splitmix64/v1, Box-Muller for normals.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace masim {

inline constexpr double kPi = 3.14159265358979323846;

// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive key combination for deriving independent streams.
inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (0x2545f4914f6cdd1dULL + b + (a << 6) + (a >> 2)));
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_key(mix_key(a, b), c);
}

inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                             std::uint64_t d) {
  return mix_key(mix_key(a, b, c), d);
}

// Uniform double in [0, 1) from a 64-bit word (53-bit mantissa).
inline double u64_to_unit(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Sequential generator: a SplitMix64 walk from a derived key.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return u64_to_unit(next_u64()); }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n), n >= 1. Rejection-free modulo is fine at our scales
  // only when n divides the range; use multiply-shift to avoid bias.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; second value cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard against log(0).
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::complex<double> complex_normal() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    double a = 2.0 * kPi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  // Fair +/-1 symbol.
  int sign() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stateless keyed draws: the same (key, indices) always yields the same
// value, independent of call order. Used for noise so that trial results
// do not depend on control flow or worker scheduling.
inline std::complex<double> complex_normal_at(std::uint64_t key, std::uint64_t i,
                                              std::uint64_t j) {
  std::uint64_t k = mix_key(key, i, j);
  double u1 = u64_to_unit(mix64(k));
  double u2 = u64_to_unit(mix64(k + 0x6a09e667f3bcc909ULL));
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  double a = 2.0 * kPi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace masim
