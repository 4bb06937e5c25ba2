#pragma once

// Three-body potential V(x, y) on R^d x R^d and its rescaled periodization
// W(a, b) = N^{2 d beta} sum_{m, m'} V(N^beta (a + 2 pi m), N^beta (b + 2 pi m')).
//
// The default profile depends on s = |x|^2 + |y|^2 + |x - y|^2 only. That
// makes V(x_i - x_j, x_i - x_k) invariant under every permutation of the
// three particles, which the Hamiltonian needs to commute with particle
// exchange. The radial factor is a Gaussian in s times a C-infinity taper
// spread over all of [0, 13.5 sigma^2], so each argument is supported in
// |x| <= 3 sigma. A taper confined to the outer half converges much more
// slowly under grid quadrature.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "quintic/grid.hpp"

namespace quintic {

struct PotentialSpec {
  enum class Kind { Gaussian, Constant, Zero };
  Kind kind = Kind::Gaussian;
  double sigma = 0.5;
  // Gaussian: continuum mass int int V. Constant: the value of V on the torus.
  double strength = 1.0;
};

inline std::string to_string(PotentialSpec::Kind k) {
  switch (k) {
    case PotentialSpec::Kind::Gaussian: return "gaussian";
    case PotentialSpec::Kind::Constant: return "constant";
    case PotentialSpec::Kind::Zero: return "zero";
  }
  return "?";
}

namespace detail {

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double cutoff_s(double sigma) { return 13.5 * sigma * sigma; }

inline double radial_profile(double s, double sigma) {
  const double sc = cutoff_s(sigma);
  if (s >= sc) return 0.0;
  const double taper = 1.0 - smooth_step(s / sc);
  return std::exp(-s / (2.0 * sigma * sigma)) * taper;
}

// int_{R^d x R^d} F(|x|^2 + |y|^2 + |x-y|^2) dx dy. The quadratic form has
// determinant 3 per coordinate, so this is
// 3^{-d/2} |S^{2d-1}| int_0^inf F(r^2) r^{2d-1} dr.
inline double profile_mass(int d, double sigma) {
  const double rmax = std::sqrt(cutoff_s(sigma));
  const int intervals = 20000;
  const double h = rmax / intervals;
  double s = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double r = i * h;
    const double wgt = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += wgt * radial_profile(r * r, sigma) * std::pow(r, 2 * d - 1);
  }
  s *= h / 3.0;
  const double sphere = 2.0 * std::pow(std::numbers::pi, d) / std::tgamma(static_cast<double>(d));
  return std::pow(3.0, -0.5 * d) * sphere * s;
}

}  // namespace detail

// Amplitude c with int int c F = strength.
inline double gaussian_amplitude(int d, const PotentialSpec& spec) {
  return spec.strength / detail::profile_mass(d, spec.sigma);
}

// Support radius of each argument of V before rescaling.
inline double support_radius(const PotentialSpec& spec) { return 3.0 * spec.sigma; }

// Continuum V(x, y) for d-vectors.
inline double potential_value(const double* x, const double* y, int d, const PotentialSpec& spec, double amplitude) {
  switch (spec.kind) {
    case PotentialSpec::Kind::Zero: return 0.0;
    case PotentialSpec::Kind::Constant: return spec.strength;
    case PotentialSpec::Kind::Gaussian: {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += x[a] * x[a] + y[a] * y[a] + (x[a] - y[a]) * (x[a] - y[a]);
      return amplitude * detail::radial_profile(s, spec.sigma);
    }
  }
  return 0.0;
}

struct PotentialTable {
  GridSpec grid;
  int N = 1;
  double beta = 0.0;
  PotentialSpec spec;
  // W(a, b) at relative grid indices a, b; flat index a * size + b.
  std::vector<double> W;
  // Grid quadrature of int int W, the discrete coupling.
  double b0_grid = 0.0;
  double max_value = 0.0;

  double operator()(std::size_t a, std::size_t b) const { return W[a * grid.size() + b]; }
};

inline PotentialTable build_potential(const GridSpec& grid, int N, double beta, const PotentialSpec& spec) {
  validate(grid);
  require(N >= 1, "particle count must be positive");
  require(beta >= 0.0, "beta must be nonnegative");
  require(spec.sigma > 0.0, "sigma must be positive");
  const std::size_t G = grid.size();
  const int d = grid.d;
  PotentialTable t;
  t.grid = grid;
  t.N = N;
  t.beta = beta;
  t.spec = spec;
  t.W.assign(G * G, 0.0);

  if (spec.kind == PotentialSpec::Kind::Constant) {
    std::fill(t.W.begin(), t.W.end(), spec.strength);
  } else if (spec.kind == PotentialSpec::Kind::Gaussian) {
    const double scale = std::pow(static_cast<double>(N), beta);
    const double radius = support_radius(spec) / scale;
    if (radius < 0.5 * grid.spacing())
      throw Error(ErrorKind::UnderResolved, "rescaled potential support " + std::to_string(radius) +
                                                " is below half the grid spacing");
    const double amplitude = gaussian_amplitude(d, spec);
    const double prefactor = std::pow(scale, 2.0 * d);
    // Lattice images of each relative point that fall inside the support.
    std::vector<std::vector<std::vector<double>>> images(G);
    const int K = static_cast<int>(std::ceil(radius / kTwoPi)) + 1;
    for_each_index(d, grid.n, [&](std::size_t lin, const int* idx) {
      std::vector<double> base(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a) base[static_cast<std::size_t>(a)] = kTwoPi * idx[a] / grid.n;
      for_each_index(d, 2 * K + 1, [&](std::size_t, const int* m) {
        std::vector<double> x(static_cast<std::size_t>(d));
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          x[static_cast<std::size_t>(a)] = scale * (base[static_cast<std::size_t>(a)] + kTwoPi * (m[a] - K));
          r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
        }
        if (r2 <= support_radius(spec) * support_radius(spec)) images[lin].push_back(std::move(x));
      });
    });
    for (std::size_t a = 0; a < G; ++a) {
      if (images[a].empty()) continue;
      for (std::size_t b = 0; b < G; ++b) {
        double s = 0.0;
        for (const auto& x : images[a])
          for (const auto& y : images[b]) s += potential_value(x.data(), y.data(), d, spec, amplitude);
        t.W[a * G + b] = prefactor * s;
      }
    }
  }
  double total = 0.0;
  for (double v : t.W) {
    total += v;
    t.max_value = std::max(t.max_value, v);
  }
  t.b0_grid = total * grid.cell_volume() * grid.cell_volume();
  return t;
}

// Index of x_i - x_j on the grid, from per-axis indices.
inline std::size_t relative_index(const int* xi, const int* xj, int d, int n) {
  std::size_t r = 0;
  for (int a = 0; a < d; ++a) r = r * static_cast<std::size_t>(n) + static_cast<std::size_t>((xi[a] - xj[a] + n) % n);
  return r;
}

}  // namespace quintic
