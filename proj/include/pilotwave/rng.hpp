#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include <boost/math/special_functions/erf.hpp>

namespace pilotwave {

/// SplitMix64 finalizer; used to derive independent sub-seeds from
/// (seed, index) so that ensemble members are reproducible regardless of
/// the order in which workers pick them up.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Seeded generator with the handful of draws the experiments need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on (0, 1); safe to feed into quantile functions.
  double open_uniform() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Standard normal by inverse CDF.
  double normal() {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * open_uniform());
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pilotwave
