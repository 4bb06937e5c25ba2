#pragma once

#include <cmath>
#include <vector>

#include "quintic/field.hpp"

namespace quintic {

// Sharp Fourier selector. LEQ keeps |xi_j| <= M for all j, GT is its
// complement, BAND is LEQ(M) - LEQ(M/2).
struct DyadicBand {
  enum class Mode { Leq, Gt, Band };
  double M = 1.0;
  Mode mode = Mode::Leq;

  bool contains(const int* xi, int d) const {
    const int s = sup_norm(xi, d);
    switch (mode) {
      case Mode::Leq: return s <= M;
      case Mode::Gt: return s > M;
      case Mode::Band: return s <= M && s > M / 2.0;
    }
    return false;
  }
};

// Noncentered cube |xi_j - center_j| <= M.
struct FrequencyCube {
  std::vector<int> center;
  double radius = 1.0;

  bool contains(const int* xi, int d) const {
    for (int a = 0; a < d; ++a)
      if (std::abs(xi[a] - center[static_cast<std::size_t>(a)]) > radius) return false;
    return true;
  }
};

template <class Pred>
TorusField apply_mask(const TorusField& f, Pred&& keep) {
  const auto& g = f.grid();
  auto c = f.coefficients();
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) {
    if (!keep(xi)) c[lin] = 0.0;
  });
  return TorusField::from_coefficients(g, std::move(c));
}

template <class Fn>
TorusField apply_multiplier(const TorusField& f, Fn&& symbol) {
  const auto& g = f.grid();
  auto c = f.coefficients();
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) { c[lin] *= symbol(xi); });
  return TorusField::from_coefficients(g, std::move(c));
}

inline TorusField project(const TorusField& f, const DyadicBand& band) {
  const int d = f.grid().d;
  return apply_mask(f, [&](const int* xi) { return band.contains(xi, d); });
}

inline TorusField project_leq(const TorusField& f, double M) {
  require(M > 0.0, "cutoff must be positive");
  return project(f, {M, DyadicBand::Mode::Leq});
}

inline TorusField project_gt(const TorusField& f, double M) {
  require(M > 0.0, "cutoff must be positive");
  return project(f, {M, DyadicBand::Mode::Gt});
}

// Strict cutoffs |xi_j| < R, used for the intermediate band P_{<R} P_{>M}.
inline TorusField project_lt(const TorusField& f, double R) {
  const int d = f.grid().d;
  return apply_mask(f, [&](const int* xi) { return sup_norm(xi, d) < R; });
}

inline TorusField dyadic_project(const TorusField& f, double M) {
  require(M >= 2.0, "dyadic band needs M >= 2");
  return project(f, {M, DyadicBand::Mode::Band});
}

inline TorusField cube_project(const TorusField& f, const FrequencyCube& Q) {
  const int d = f.grid().d;
  require(static_cast<int>(Q.center.size()) == d, "cube center has wrong dimension");
  require(Q.radius > 0.0, "cube radius must be positive");
  return apply_mask(f, [&](const int* xi) { return Q.contains(xi, d); });
}

// e^{i xi0.x} f
inline TorusField modulate(const TorusField& f, const std::vector<int>& xi0) {
  auto w = plane_wave(f.grid(), xi0);
  TorusField out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
  return out;
}

// One-axis Dirichlet kernel by direct summation over |xi| <= M.
inline Complex dirichlet_1d(double x, double M) {
  Complex s = 0.0;
  const int m = static_cast<int>(std::floor(M));
  for (int xi = -m; xi <= m; ++xi) s += std::polar(1.0, xi * x);
  return s;
}

// Closed form of the geometric sum, sin((M+1/2)x)/sin(x/2).
inline double dirichlet_closed_form(double x, int M) {
  const double den = std::sin(0.5 * x);
  if (std::abs(den) < 1e-14) return 2.0 * M + 1.0;
  return std::sin((M + 0.5) * x) / den;
}

// The alternative form sin((M+1)x)/sin(x), kept for comparison only.
inline double dirichlet_alt_form(double x, int M) {
  const double den = std::sin(x);
  if (std::abs(den) < 1e-14) return std::cos((M + 1.0) * x) * (M + 1.0) / std::cos(x);
  return std::sin((M + 1.0) * x) / den;
}

inline TorusField dirichlet_kernel(const GridSpec& grid, double M) {
  validate(grid);
  require(M > 0.0 && M <= grid.n / 2, "Dirichlet cutoff must lie in (0, n/2]");
  return sample(grid, [&](const double* x) {
    Complex p = 1.0;
    for (int a = 0; a < grid.d; ++a) p *= dirichlet_1d(x[a], M);
    return p;
  });
}

// (2pi)^{-d} int K(x - y) f(y) dy by direct grid summation, O(size^2).
inline TorusField convolve_direct(const TorusField& K, const TorusField& f) {
  require(K.grid() == f.grid(), "fields live on different grids");
  const auto& g = f.grid();
  const std::size_t G = g.size();
  std::vector<std::vector<int>> idx(G, std::vector<int>(static_cast<std::size_t>(g.d)));
  for_each_index(g.d, g.n, [&](std::size_t lin, const int* i) { idx[lin].assign(i, i + g.d); });
  TorusField out(g);
  const double scale = 1.0 / static_cast<double>(G);
  for (std::size_t x = 0; x < G; ++x) {
    Complex s = 0.0;
    for (std::size_t y = 0; y < G; ++y) {
      std::size_t diff = 0;
      for (int a = 0; a < g.d; ++a) {
        const int m = (idx[x][static_cast<std::size_t>(a)] - idx[y][static_cast<std::size_t>(a)] + g.n) % g.n;
        diff = diff * static_cast<std::size_t>(g.n) + static_cast<std::size_t>(m);
      }
      s += K[diff] * f[y];
    }
    out[x] = s * scale;
  }
  return out;
}

inline double japanese(const int* xi, int d) { return std::sqrt(1.0 + squared_norm(xi, d)); }

// <nabla>^s
inline TorusField apply_S(const TorusField& f, double s) {
  const int d = f.grid().d;
  return apply_multiplier(f, [&](const int* xi) { return std::pow(1.0 + squared_norm(xi, d), 0.5 * s); });
}

// |nabla|^s, zero mode removed for s > 0.
inline TorusField apply_R(const TorusField& f, double s) {
  const int d = f.grid().d;
  return apply_multiplier(f, [&](const int* xi) {
    const double r = std::sqrt(squared_norm(xi, d));
    if (r == 0.0) return s > 0.0 ? 0.0 : (s == 0.0 ? 1.0 : 0.0);
    return std::pow(r, s);
  });
}

// Weighted Parseval sum (2pi)^d sum_xi w(xi) |c_xi|^2.
template <class Fn>
double spectral_energy(const TorusField& f, Fn&& weight) {
  const auto& g = f.grid();
  const auto c = f.coefficients();
  double s = 0.0;
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) { s += weight(xi) * std::norm(c[lin]); });
  return s * g.volume();
}

inline double sobolev_norm(const TorusField& f, double s) {
  const int d = f.grid().d;
  return std::sqrt(spectral_energy(f, [&](const int* xi) { return std::pow(1.0 + squared_norm(xi, d), s); }));
}

// ||grad f||_{L^2}^2
inline double gradient_energy(const TorusField& f) {
  const int d = f.grid().d;
  return spectral_energy(f, [&](const int* xi) { return squared_norm(xi, d); });
}

inline double bernstein_ratio(const TorusField& f, double M, double p, double q) {
  require(p >= 1.0 && q >= p, "bernstein_ratio needs 1 <= p <= q");
  const double den_norm = lp_norm(f, p);
  if (den_norm == 0.0) return 0.0;
  const int d = f.grid().d;
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double factor = std::pow(M, d * (1.0 / p - inv_q));
  return lp_norm(project_leq(f, M), q) / (factor * den_norm);
}

// Spectral resampling onto n_new points per axis: zero padding when
// refining, truncation when coarsening.
inline TorusField resample(const TorusField& f, int n_new) {
  const auto& g = f.grid();
  if (n_new == g.n) return f;
  GridSpec h{g.d, n_new};
  validate(h);
  const auto c = f.coefficients();
  std::vector<Complex> out(h.size());
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) {
    std::size_t target = 0;
    for (int a = 0; a < g.d; ++a) {
      if (xi[a] > n_new / 2 || xi[a] <= -n_new / 2) return;
      target = target * static_cast<std::size_t>(n_new) + static_cast<std::size_t>(frequency_index(xi[a], n_new));
    }
    out[target] += c[lin];
  });
  return TorusField::from_coefficients(h, std::move(out));
}

// Highest |xi_j| carrying a coefficient above tol (relative to the largest).
inline int spectral_extent(const TorusField& f, double tol = 1e-14) {
  const auto& g = f.grid();
  const auto c = f.coefficients();
  double peak = 0.0;
  for (const auto& v : c) peak = std::max(peak, std::abs(v));
  int extent = 0;
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) {
    if (std::abs(c[lin]) > tol * peak) extent = std::max(extent, sup_norm(xi, g.d));
  });
  return extent;
}

}  // namespace quintic
