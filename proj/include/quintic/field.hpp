#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "quintic/fft.hpp"
#include "quintic/grid.hpp"
#include "quintic/random.hpp"

namespace quintic {

using Complex = std::complex<double>;

// Complex scalar field on a periodic grid. Values are stored on the physical
// side; coefficients() returns the Fourier side in FFT order with the
// convention f(x) = sum_xi c_xi e^{i xi.x}.
class TorusField {
 public:
  TorusField() = default;
  explicit TorusField(const GridSpec& grid) : grid_(grid), values_(grid.size()) { validate(grid); }
  TorusField(const GridSpec& grid, std::vector<Complex> values) : grid_(grid), values_(std::move(values)) {
    validate(grid);
    require(values_.size() == grid.size(), "field size does not match grid");
  }

  static TorusField from_coefficients(const GridSpec& grid, std::vector<Complex> coeffs) {
    require(coeffs.size() == grid.size(), "coefficient count does not match grid");
    fft::to_physical(coeffs, grid.d, grid.n);
    return TorusField(grid, std::move(coeffs));
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<Complex>& values() const { return values_; }
  std::vector<Complex>& values() { return values_; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }
  Complex& operator[](std::size_t i) { return values_[i]; }

  std::vector<Complex> coefficients() const {
    auto c = values_;
    fft::to_spectral(c, grid_.d, grid_.n);
    return c;
  }

  TorusField& operator+=(const TorusField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  TorusField& operator-=(const TorusField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  TorusField& operator*=(Complex s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
  friend TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
  friend TorusField operator*(Complex s, TorusField a) { return a *= s; }

 private:
  void check_same(const TorusField& o) const { require(grid_ == o.grid_, "fields live on different grids"); }

  GridSpec grid_;
  std::vector<Complex> values_;
};

// Physical coordinate of grid index m: 2 pi m / n.
inline double coordinate(int m, int n) { return kTwoPi * m / n; }

inline TorusField sample(const GridSpec& grid, const std::function<Complex(const double*)>& fn) {
  TorusField f(grid);
  std::vector<double> x(static_cast<std::size_t>(grid.d));
  for_each_index(grid.d, grid.n, [&](std::size_t lin, const int* idx) {
    for (int a = 0; a < grid.d; ++a) x[static_cast<std::size_t>(a)] = coordinate(idx[a], grid.n);
    f[lin] = fn(x.data());
  });
  return f;
}

// amplitude * e^{i xi.x}; xi is a d-tuple.
inline TorusField plane_wave(const GridSpec& grid, const std::vector<int>& xi, Complex amplitude = 1.0) {
  require(static_cast<int>(xi.size()) == grid.d, "plane wave frequency has wrong dimension");
  return sample(grid, [&](const double* x) {
    double phase = 0.0;
    for (int a = 0; a < grid.d; ++a) phase += xi[static_cast<std::size_t>(a)] * x[a];
    return amplitude * std::polar(1.0, phase);
  });
}

inline TorusField constant_field(const GridSpec& grid, Complex value) {
  TorusField f(grid);
  for (auto& v : f.values()) v = value;
  return f;
}

// Random coefficients on |xi_j| <= band, complex normal with an optional
// <xi>^{-decay} envelope.
inline TorusField random_band_limited(const GridSpec& grid, int band, Rng& rng, double decay = 0.0) {
  std::vector<Complex> c(grid.size());
  for_each_frequency(grid.d, grid.n, [&](std::size_t lin, const int* xi) {
    if (sup_norm(xi, grid.d) > band) return;
    c[lin] = rng.complex_normal() * std::pow(1.0 + squared_norm(xi, grid.d), -0.5 * decay);
  });
  return TorusField::from_coefficients(grid, std::move(c));
}

// Nonnegative random amplitudes on |xi_j| <= band with phases aligned at a
// random point x0, so |f| peaks there. Random fields with independent
// phases are far from extremal for sup-norm bounds; this family is not.
inline TorusField random_coherent_band_limited(const GridSpec& grid, int band, Rng& rng) {
  std::vector<double> x0(static_cast<std::size_t>(grid.d));
  for (auto& x : x0) x = rng.uniform(0.0, kTwoPi);
  std::vector<Complex> c(grid.size());
  for_each_frequency(grid.d, grid.n, [&](std::size_t lin, const int* xi) {
    if (sup_norm(xi, grid.d) > band) return;
    double phase = 0.0;
    for (int a = 0; a < grid.d; ++a) phase -= xi[a] * x0[static_cast<std::size_t>(a)];
    c[lin] = std::polar(rng.uniform01(), phase);
  });
  return TorusField::from_coefficients(grid, std::move(c));
}

// integral of conj(f) g.
inline Complex inner(const TorusField& f, const TorusField& g) {
  require(f.grid() == g.grid(), "fields live on different grids");
  Complex s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
  return s * f.grid().cell_volume();
}

inline double l2_norm(const TorusField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s += std::norm(v);
  return std::sqrt(s * f.grid().cell_volume());
}

inline double sup_norm(const TorusField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) s = std::max(s, std::abs(v));
  return s;
}

// L^p norm by grid quadrature; p = infinity gives the max.
inline double lp_norm(const TorusField& f, double p) {
  if (std::isinf(p)) return sup_norm(f);
  require(p >= 1.0, "lp_norm needs p >= 1");
  double s = 0.0;
  for (const auto& v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

inline TorusField normalized(TorusField f) {
  const double m = l2_norm(f);
  require(m > 0.0, "cannot normalize a zero field");
  return (1.0 / m) * std::move(f);
}

inline double max_abs_difference(const TorusField& a, const TorusField& b) {
  require(a.grid() == b.grid(), "fields live on different grids");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

}  // namespace quintic
