#pragma once

#include <cmath>
#include <cstdint>

#include "ggrow/errors.hpp"

namespace ggrow {

// splitmix64-v1: 64-bit counter-based generator (Weyl increment plus a
// two-round finaliser). The constants are fixed so every stream reproduces
// bit-for-bit across platforms and compilers.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Seed for a named substream (repetition, scenario, subsample, ...), so that
// parallel work never shares a stream with the master generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return detail::mix64(detail::mix64(master + 0x9E3779B97F4A7C15ULL) ^
                       (stream + 0x85EBCA77C2B2AE63ULL));
}

// Distributions the library needs on top of SplitMix64.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_.next_u64(); }

  // Uniform on [0, 1) using the top 53 bits.
  double uniform01() {
    return static_cast<double>(gen_.next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw DegeneracyError("uniform_below: empty range");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = gen_.next_u64();
    while (x < threshold) x = gen_.next_u64();
    return x % n;
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // log(0) guard
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    spare_ = radius * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return radius * std::cos(kTwoPi * u2);
  }

  // -1 or +1 with equal probability.
  double rademacher() { return (gen_.next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  SplitMix64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ggrow
