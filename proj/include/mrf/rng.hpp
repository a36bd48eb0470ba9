#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mrf/types.hpp"

// Seeded draws used across the toolkit. All conversions from raw engine output
// are spelled out so streams are reproducible independent of the standard
// library's distribution implementations.

namespace mrf {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(bits() % span);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return mag * std::cos(2.0 * kPi * u2);
  }

  Cplx normal_complex(double sigma_per_component) {
    return {sigma_per_component * normal(), sigma_per_component * normal()};
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mrf
