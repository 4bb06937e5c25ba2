#pragma once

// Reproducible random numbers.
//
// All randomness in the library flows from std::mt19937_64, whose output
// sequence is fixed by the standard. The standard distributions are not
// portable across library implementations, so the uniform and normal
// transforms are done here: uniform01 takes the top 53 bits, normal uses
// the Box-Muller transform on two uniforms. Same seed, same numbers, on
// every platform.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace quintic {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

  std::uint64_t next_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace quintic
