#pragma once

// Seeded randomness. xoshiro256** driven by splitmix64 seeding; every variate
// is produced by code in this file so streams are bit-identical across
// standard library implementations.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace flightwp {

/// Master or per-replica seed.
struct RandomSeed {
  std::uint64_t value = 0;

  friend constexpr bool operator==(RandomSeed, RandomSeed) = default;
};

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Splitting rule: the child seed for `index` is the splitmix64 output of
/// `seed + (index + 1) * golden`, i.e. the (index+1)-th splitmix64 draw
/// starting from `seed`. Children of distinct indices are independent
/// streams for all practical purposes.
constexpr RandomSeed derive_seed(RandomSeed seed, std::uint64_t index) noexcept {
  std::uint64_t state = seed.value + index * 0x9E3779B97F4A7C15ULL;
  return RandomSeed{splitmix64(state)};
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RandomSeed seed) noexcept {
    std::uint64_t sm = seed.value;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Unit-rate exponential, strictly positive.
  double exponential() noexcept { return -std::log(uniform_open()); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform_open()));
    const double angle = 2.0 * std::numbers::pi * uniform_open();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 handled by the usual
  /// U^{1/shape} boost.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double boosted = gamma(shape + 1.0);
      return boosted * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace flightwp
