#pragma once

// Empirical constants for the dispersive and Sobolev-type inequalities.
// Each probe returns left side / right side without the implied constant.
// Products of band-limited fields are evaluated on a zero-padded grid large
// enough that no aliasing occurs, so their norms are exact up to roundoff.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "quintic/field.hpp"
#include "quintic/random.hpp"
#include "quintic/spectral.hpp"

namespace quintic {

namespace detail {

// Nonzero Fourier modes of a field; the coefficient list behind every padded evaluation.
struct ModeList {
  int d = 3;
  std::vector<std::array<int, 3>> xi;
  std::vector<Complex> c;

  std::size_t size() const { return c.size(); }
  double l2() const {
    double s = 0.0;
    for (const auto& v : c) s += std::norm(v);
    return std::sqrt(s * std::pow(kTwoPi, d));
  }
  int extent() const {
    int e = 0;
    for (const auto& x : xi)
      for (int a = 0; a < d; ++a) e = std::max(e, std::abs(x[static_cast<std::size_t>(a)]));
    return e;
  }
};

// Coefficients below this fraction of the largest one are transform
// roundoff, not modes; keeping them would inflate the padded grid.
inline constexpr double kModeFloor = 1e-13;

template <class Pred>
ModeList modes(const TorusField& f, Pred&& keep) {
  const auto& g = f.grid();
  const auto c = f.coefficients();
  double peak = 0.0;
  for (const auto& v : c) peak = std::max(peak, std::abs(v));
  ModeList out;
  out.d = g.d;
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) {
    if (std::abs(c[lin]) <= kModeFloor * peak || !keep(xi)) return;
    std::array<int, 3> x{};
    for (int a = 0; a < g.d; ++a) x[static_cast<std::size_t>(a)] = xi[a];
    out.xi.push_back(x);
    out.c.push_back(c[lin]);
  });
  return out;
}

inline ModeList modes(const TorusField& f) {
  return modes(f, [](const int*) { return true; });
}

inline std::size_t padded_index(const std::array<int, 3>& xi, int d, int n) {
  std::size_t lin = 0;
  for (int a = 0; a < d; ++a) lin = lin * static_cast<std::size_t>(n) + static_cast<std::size_t>(frequency_index(xi[static_cast<std::size_t>(a)], n));
  return lin;
}

// Samples of e^{sign i t Lap} f on the n-point grid.
inline std::vector<Complex> evaluate(const ModeList& m, int n, double t, int sign = 1) {
  std::vector<Complex> v(ipow(static_cast<std::size_t>(n), m.d), Complex(0.0));
  for (std::size_t i = 0; i < m.size(); ++i) {
    double k2 = 0.0;
    for (int a = 0; a < m.d; ++a) k2 += static_cast<double>(m.xi[i][static_cast<std::size_t>(a)]) * m.xi[i][static_cast<std::size_t>(a)];
    v[padded_index(m.xi[i], m.d, n)] += m.c[i] * std::polar(1.0, -sign * t * k2);
  }
  fft::backward(v.data(), m.d, n);
  return v;
}

// Smallest even grid with n > 2 * extent, so products of the given total
// frequency extent are represented without aliasing.
// Rounded up to a 2-3-5 smooth size for the transform.
inline int alias_free_size(int extent) {
  for (int n = std::max(4, 2 * extent + 2);; n += 2) {
    int m = n;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

// ||g||_{H^s} from physical samples on the n-point grid.
inline double sobolev_from_samples(std::vector<Complex> v, int d, int n, double s) {
  fft::to_spectral(v, d, n);
  double sum = 0.0;
  for_each_frequency(d, n, [&](std::size_t lin, const int* xi) {
    sum += std::pow(1.0 + squared_norm(xi, d), s) * std::norm(v[lin]);
  });
  return std::sqrt(sum * std::pow(kTwoPi, d));
}

inline double spatial_integral(const std::vector<Complex>& v, int d, int n, Complex* sum_out = nullptr) {
  Complex s = 0.0;
  for (const auto& x : v) s += x;
  s *= std::pow(kTwoPi / n, d);
  if (sum_out) *sum_out = s;
  return std::abs(s);
}

inline std::vector<double> trapezoid_weights(double T, int nt) {
  require(nt >= 2, "need at least two time nodes");
  std::vector<double> w(static_cast<std::size_t>(nt), T / (nt - 1));
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

inline double time_node(double T, int nt, int i) { return T * i / (nt - 1); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Strichartz on the 3-torus

inline double strichartz_lhs(const detail::ModeList& m, int n, double p, double T, int nt) {
  const auto w = detail::trapezoid_weights(T, nt);
  const double cell = std::pow(kTwoPi / n, m.d);
  double total = 0.0;
  for (int i = 0; i < nt; ++i) {
    const auto v = detail::evaluate(m, n, detail::time_node(T, nt, i));
    double s = 0.0;
    for (const auto& x : v) s += std::pow(std::abs(x), p);
    total += w[static_cast<std::size_t>(i)] * s * cell;
  }
  return std::pow(total, 1.0 / p);
}

inline void check_strichartz_args(const TorusField& f, double p, int nt) {
  require(f.grid().d == 3, "the Strichartz probe is three-dimensional");
  require(p > 10.0 / 3.0, "Strichartz probe needs p > 10/3");
  require(nt >= 32, "Strichartz probe needs at least 32 time nodes");
}

// ||P_{<=M} e^{it Lap} f||_{L^p_{t,x}([0,T] x T^3)} / (M^{3/2-5/p} ||P_{<=M} f||_{L^2})
inline double strichartz_ratio(const TorusField& f, double M, double p, double T, int nt = 64) {
  check_strichartz_args(f, p, nt);
  const int d = f.grid().d;
  const auto m = detail::modes(f, [&](const int* xi) { return sup_norm(xi, d) <= M; });
  if (m.size() == 0) return 0.0;
  return strichartz_lhs(m, f.grid().n, p, T, nt) / (std::pow(M, 1.5 - 5.0 / p) * m.l2());
}

// Same with the centered projector replaced by a shifted cube of radius M.
inline double strichartz_ratio_cube(const TorusField& f, const FrequencyCube& Q, double p, double T, int nt = 64) {
  check_strichartz_args(f, p, nt);
  const int d = f.grid().d;
  const auto m = detail::modes(f, [&](const int* xi) { return Q.contains(xi, d); });
  if (m.size() == 0) return 0.0;
  return strichartz_lhs(m, f.grid().n, p, T, nt) / (std::pow(Q.radius, 1.5 - 5.0 / p) * m.l2());
}

// ---------------------------------------------------------------------------
// bilinear Strichartz

// ||P_{M1} e^{it Lap} f1 P_{M2} e^{it Lap} f2||_{L^2_{t,x}}
//   / (M2^{1/2} (M2/M1 + 1/M2)^delta ||P_{M1} f1|| ||P_{M2} f2||)
inline double bilinear_strichartz_ratio(const TorusField& f1, const TorusField& f2, double M1, double M2, double delta,
                                        double T, int nt = 64) {
  require(M2 <= M1, "bilinear probe needs M2 <= M1");
  require(delta > 0.0 && delta <= 1.0 / 22.0, "delta must lie in (0, 1/22]");
  require(f1.grid() == f2.grid(), "fields live on different grids");
  const int d = f1.grid().d;
  const DyadicBand b1{M1, DyadicBand::Mode::Band};
  const DyadicBand b2{M2, DyadicBand::Mode::Band};
  const auto m1 = detail::modes(f1, [&](const int* xi) { return b1.contains(xi, d); });
  const auto m2 = detail::modes(f2, [&](const int* xi) { return b2.contains(xi, d); });
  if (m1.size() == 0 || m2.size() == 0) return 0.0;
  const double n1 = m1.l2();
  const double n2 = m2.l2();
  const int np = detail::alias_free_size(m1.extent() + m2.extent());
  const auto w = detail::trapezoid_weights(T, nt);
  const double cell = std::pow(kTwoPi / np, d);
  double total = 0.0;
  for (int i = 0; i < nt; ++i) {
    const double t = detail::time_node(T, nt, i);
    const auto u = detail::evaluate(m1, np, t);
    const auto v = detail::evaluate(m2, np, t);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += std::norm(u[k] * v[k]);
    total += w[static_cast<std::size_t>(i)] * s * cell;
  }
  const double rhs = std::sqrt(M2) * std::pow(M2 / M1 + 1.0 / M2, delta) * n1 * n2;
  return std::sqrt(total) / rhs;
}

// ---------------------------------------------------------------------------
// refined Sobolev

struct RefinedSobolevParts {
  double lhs = 0.0;
  double grad = 0.0;       // ||grad phi||
  double grad_mid = 0.0;   // ||grad P_{<R} P_{>M} phi||
  double grad_high = 0.0;  // ||grad P_{>M} phi||
};

// Gradient norms and |int (P_H phi)^{6-m} (P_L phi)^m| for m = 3, 2, 1, with
// P_L = P_{<=M}, P_H = P_{>M}. lhs[which - 1] holds m = 4 - which.
struct RefinedSobolevData {
  std::array<double, 3> lhs{};
  double grad = 0.0;       // ||grad phi||
  double grad_high = 0.0;  // ||grad P_{>M} phi||
};

inline RefinedSobolevData refined_sobolev_data(const TorusField& phi, double M) {
  require(M > 0.0, "need M > 0");
  const int d = phi.grid().d;
  RefinedSobolevData r;
  r.grad = std::sqrt(gradient_energy(phi));
  r.grad_high = std::sqrt(gradient_energy(project_gt(phi, M)));
  const auto lo = detail::modes(phi, [&](const int* xi) { return sup_norm(xi, d) <= M; });
  const auto hi = detail::modes(phi, [&](const int* xi) { return sup_norm(xi, d) > M; });
  if (hi.size() == 0 || lo.size() == 0) return r;
  // the integral only sees the zero mode of a product of six factors
  const int np = detail::alias_free_size(3 * std::max(lo.extent(), hi.extent()));
  const auto L = detail::evaluate(lo, np, 0.0);
  const auto H = detail::evaluate(hi, np, 0.0);
  for (int which = 1; which <= 3; ++which) {
    const int m = 4 - which;
    std::vector<Complex> prod(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) prod[i] = std::pow(H[i], 6 - m) * std::pow(L[i], m);
    r.lhs[static_cast<std::size_t>(which - 1)] = detail::spatial_integral(prod, d, np);
  }
  return r;
}

// ||grad P_{<R} P_{>M} phi||
inline double intermediate_gradient(const TorusField& phi, double M, double R) {
  return std::sqrt(gradient_energy(project_gt(project_lt(phi, R), M)));
}

inline RefinedSobolevParts refined_sobolev_parts(const TorusField& phi, double M, double R, int which) {
  require(which >= 1 && which <= 3, "refined Sobolev variant is 1, 2 or 3");
  require(R >= M && M > 0.0, "need R >= M > 0");
  const auto data = refined_sobolev_data(phi, M);
  return {data.lhs[static_cast<std::size_t>(which - 1)], data.grad, intermediate_gradient(phi, M, R), data.grad_high};
}

inline double refined_sobolev_rhs(const RefinedSobolevParts& p, double M, double R, int which) {
  const double q = M / R;
  const double mid2 = p.grad_mid * p.grad_mid;
  const double h = p.grad_high;
  switch (which) {
    case 1: return std::pow(p.grad, 3) * (mid2 * h + std::pow(q, 1.5) * std::pow(h, 3));
    case 2: return std::pow(p.grad, 2) * (mid2 * h * h + q * std::pow(h, 4));
    default: return p.grad * (mid2 * std::pow(h, 3) + std::sqrt(q) * std::pow(h, 5));
  }
}

inline double refined_sobolev_ratio(const TorusField& phi, double M, double R, int which) {
  const auto p = refined_sobolev_parts(phi, M, R, which);
  if (p.lhs == 0.0) return 0.0;
  return p.lhs / refined_sobolev_rhs(p, M, R, which);
}

// ---------------------------------------------------------------------------
// multilinear estimates

enum class MultilinearVariant { MLFL1, MLFL2, Old1, Old2 };

inline const char* to_string(MultilinearVariant v) {
  switch (v) {
    case MultilinearVariant::MLFL1: return "MLFL1";
    case MultilinearVariant::MLFL2: return "MLFL2";
    case MultilinearVariant::Old1: return "Old1";
    case MultilinearVariant::Old2: return "Old2";
  }
  return "?";
}

struct MultilinearNorms {
  double l1_hminus = 0.0;  // ||prod e^{+-it Lap} f_j||_{L^1_T H^{-1}}
  double l1_hplus = 0.0;   // same in L^1_T H^1
};

inline MultilinearNorms multilinear_lhs(const std::array<TorusField, 5>& f, double T, int nt,
                                        const std::array<int, 5>& signs = {1, 1, 1, 1, 1}) {
  const int d = f[0].grid().d;
  std::array<detail::ModeList, 5> m;
  int extent = 0;
  for (std::size_t j = 0; j < 5; ++j) {
    require(f[j].grid() == f[0].grid(), "fields live on different grids");
    m[j] = detail::modes(f[j]);
    if (m[j].size() == 0) return {};
    extent += m[j].extent();
  }
  const int np = detail::alias_free_size(extent);
  const auto w = detail::trapezoid_weights(T, nt);
  MultilinearNorms out;
  for (int i = 0; i < nt; ++i) {
    const double t = detail::time_node(T, nt, i);
    auto prod = detail::evaluate(m[0], np, t, signs[0]);
    for (std::size_t j = 1; j < 5; ++j) {
      const auto v = detail::evaluate(m[j], np, t, signs[j]);
      for (std::size_t k = 0; k < prod.size(); ++k) prod[k] *= v[k];
    }
    auto c = prod;
    fft::to_spectral(c, d, np);
    double sm = 0.0, sp = 0.0;
    for_each_frequency(d, np, [&](std::size_t lin, const int* xi) {
      const double j2 = 1.0 + squared_norm(xi, d);
      sm += std::norm(c[lin]) / j2;
      sp += std::norm(c[lin]) * j2;
    });
    const double vol = std::pow(kTwoPi, d);
    out.l1_hminus += w[static_cast<std::size_t>(i)] * std::sqrt(sm * vol);
    out.l1_hplus += w[static_cast<std::size_t>(i)] * std::sqrt(sp * vol);
  }
  return out;
}

inline double multilinear_rhs(const std::array<TorusField, 5>& f, double M0, double T, MultilinearVariant v) {
  std::array<double, 5> h1{};
  for (std::size_t j = 0; j < 5; ++j) h1[j] = sobolev_norm(f[j], 1.0);
  auto split = [&](const TorusField& g, double hnorm) {
    const double high = M0 > 0.0 ? l2_norm(apply_S(project_gt(g, M0), 1.0))
                                  : l2_norm(apply_S(g, 1.0));
    return std::pow(T, 5.0 / 22.0) * std::pow(M0, 5.0 / 11.0) * hnorm + high;
  };
  switch (v) {
    case MultilinearVariant::MLFL1: return sobolev_norm(f[0], -1.0) * split(f[1], h1[1]) * h1[2] * h1[3] * h1[4];
    case MultilinearVariant::MLFL2: return split(f[0], h1[0]) * h1[1] * h1[2] * h1[3] * h1[4];
    case MultilinearVariant::Old1: return sobolev_norm(f[0], -1.0) * h1[1] * h1[2] * h1[3] * h1[4];
    case MultilinearVariant::Old2: return h1[0] * h1[1] * h1[2] * h1[3] * h1[4];
  }
  return 0.0;
}

inline bool uses_hminus(MultilinearVariant v) {
  return v == MultilinearVariant::MLFL1 || v == MultilinearVariant::Old1;
}

inline double multilinear_ratio(const std::array<TorusField, 5>& f, double M0, double T, MultilinearVariant v,
                                int nt = 64) {
  require(f[0].grid().d == 3, "the multilinear probe is three-dimensional");
  require(T > 0.0 && M0 >= 0.0, "need T > 0 and M0 >= 0");
  const auto lhs = multilinear_lhs(f, T, nt);
  const double num = uses_hminus(v) ? lhs.l1_hminus : lhs.l1_hplus;
  if (num == 0.0) return 0.0;
  return num / multilinear_rhs(f, M0, T, v);
}

// ---------------------------------------------------------------------------
// approximation of identity, one-particle case

// rho_alpha(x, y) = r_alpha(x) r_alpha(y) with a smooth compactly supported
// bump r of radius alpha, normalized to unit discrete mass on the grid.
inline TorusField bump(const GridSpec& g, double alpha) {
  require(alpha >= 4.0 * g.spacing(), "alpha is not resolved by the grid");
  require(alpha < kTwoPi / 2.0, "alpha must be smaller than half the period");
  TorusField r(g);
  for_each_index(g.d, g.n, [&](std::size_t lin, const int* idx) {
    double s2 = 0.0;
    for (int a = 0; a < g.d; ++a) {
      double x = kTwoPi * idx[a] / g.n;
      if (x > kTwoPi / 2.0) x -= kTwoPi;
      s2 += (x / alpha) * (x / alpha);
    }
    r[lin] = s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0;
  });
  double mass = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) mass += r[i].real();
  mass *= g.cell_volume();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] /= mass;
  return r;
}

// (r * u)(x) = sum_y r(x - y) u(y) w
inline TorusField periodic_convolve(const TorusField& r, const TorusField& u) {
  const auto& g = u.grid();
  std::vector<Complex> a = r.values(), b = u.values();
  fft::forward(a.data(), g.d, g.n);
  fft::forward(b.data(), g.d, g.n);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  fft::backward(a.data(), g.d, g.n);
  const double scale = g.cell_volume() / static_cast<double>(a.size());
  for (auto& v : a) v *= scale;
  return TorusField(g, std::move(a));
}

// |Tr J (rho_alpha(x1-x2, x1-x3) - delta delta)(|phi><phi|)^{tensor 3}| for J = |a><b|:
// |int conj(b) phi I| |int conj(phi) a| with I = (r_alpha * |phi|^2)^2 - |phi|^4.
inline double approx_identity_error(const TorusField& phi, const TorusField& a, const TorusField& b, double alpha) {
  const auto& g = phi.grid();
  TorusField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::norm(phi[i]);
  const auto ru = periodic_convolve(bump(g, alpha), u);
  TorusField integrand(g);
  for (std::size_t i = 0; i < u.size(); ++i)
    integrand[i] = std::conj(b[i]) * phi[i] * (ru[i] * ru[i] - u[i] * u[i]);
  Complex s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += integrand[i];
  return std::abs(s * g.cell_volume()) * std::abs(inner(phi, a));
}

// error / (alpha^{1/2} ||a|| ||b|| ||phi||_{H^1}^6)
inline double approx_identity_ratio(const TorusField& phi, const TorusField& a, const TorusField& b, double alpha) {
  const double err = approx_identity_error(phi, a, b, alpha);
  if (err == 0.0) return 0.0;
  return err / (std::sqrt(alpha) * l2_norm(a) * l2_norm(b) * std::pow(sobolev_norm(phi, 1.0), 6));
}

// Least-squares slope of log error against log alpha; 0 when any error vanishes.
inline double approx_identity_rate(const TorusField& phi, const TorusField& a, const TorusField& b,
                                   const std::vector<double>& alphas) {
  require(alphas.size() >= 2, "need at least two alpha values");
  std::vector<double> x, y;
  for (double al : alphas) {
    const double e = approx_identity_error(phi, a, b, al);
    if (e == 0.0) return 0.0;
    x.push_back(std::log(al));
    y.push_back(std::log(e));
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// sampling

enum class Lemma { Strichartz, Bilinear, RefinedSobolev, Multilinear, ApproxIdentity };

inline const char* to_string(Lemma l) {
  switch (l) {
    case Lemma::Strichartz: return "strichartz";
    case Lemma::Bilinear: return "bilinear";
    case Lemma::RefinedSobolev: return "refined-sobolev";
    case Lemma::Multilinear: return "multilinear";
    case Lemma::ApproxIdentity: return "approx-identity";
  }
  return "?";
}

inline std::optional<Lemma> lemma_from_string(const std::string& s) {
  for (Lemma l : {Lemma::Strichartz, Lemma::Bilinear, Lemma::RefinedSobolev, Lemma::Multilinear, Lemma::ApproxIdentity})
    if (s == to_string(l)) return l;
  return std::nullopt;
}

struct ProbeTuple {
  std::vector<std::pair<std::string, double>> params;
  double max_ratio = 0.0;
  double max_first_half = 0.0;
  bool stable = true;
};

struct ProbeReport {
  std::string lemma_id;
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<ProbeTuple> ratio_table;
  double max_ratio = 0.0;
  bool stable = true;
  std::optional<double> min_slope;  // approx-identity only
};

struct ProbeOptions {
  Lemma lemma = Lemma::Strichartz;
  std::uint64_t seed = 1;
  int samples = 0;  // 0: lemma default
  int threads = 1;
  double T = 1.0;
  int nt = 32;
  double delta = 0.02;
  double growth_limit = 1.5;
};

inline int default_samples(Lemma l) {
  switch (l) {
    case Lemma::Strichartz: return 100;
    case Lemma::Bilinear: return 100;
    case Lemma::RefinedSobolev: return 200;
    case Lemma::Multilinear: return 50;
    case Lemma::ApproxIdentity: return 50;
  }
  return 50;
}

namespace detail {

inline TorusField mean_zero(TorusField f) {
  return apply_mask(f, [&](const int* xi) { return sup_norm(xi, f.grid().d) > 0; });
}

// Runs fn(sample, rng) for every sample; each sample has its own generator
// seeded from the master sequence, so results do not depend on threads.
template <class Fn>
void for_each_sample(int samples, std::uint64_t seed, int threads, Fn&& fn) {
  Rng master(seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(samples));
  for (auto& s : seeds) s = master.next_seed();
  threads = std::clamp(threads, 1, std::max(1, samples));
  if (threads == 1) {
    for (int i = 0; i < samples; ++i) {
      Rng rng(seeds[static_cast<std::size_t>(i)]);
      fn(i, rng);
    }
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = t; i < samples; i += threads) {
        Rng rng(seeds[static_cast<std::size_t>(i)]);
        fn(i, rng);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Fills the running maxima: stable iff max over all samples < limit * max over the first half.
inline void summarize(ProbeReport& rep, const std::vector<std::vector<double>>& ratios, double limit) {
  rep.max_ratio = 0.0;
  rep.stable = true;
  for (std::size_t t = 0; t < rep.ratio_table.size(); ++t) {
    auto& row = rep.ratio_table[t];
    const auto& r = ratios[t];
    const std::size_t half = r.size() / 2;
    row.max_first_half = half ? *std::max_element(r.begin(), r.begin() + static_cast<long>(half)) : 0.0;
    row.max_ratio = r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
    row.stable = row.max_ratio == 0.0 || row.max_ratio < limit * row.max_first_half;
    rep.max_ratio = std::max(rep.max_ratio, row.max_ratio);
    rep.stable = rep.stable && row.stable;
  }
}

inline ProbeReport run_probe(const ProbeOptions& opt) {
  ProbeReport rep;
  rep.lemma_id = to_string(opt.lemma);
  rep.seed = opt.seed;
  rep.samples = opt.samples > 0 ? opt.samples : default_samples(opt.lemma);
  const int S = rep.samples;
  std::vector<std::vector<double>> ratios;
  auto table = [&](std::vector<std::vector<std::pair<std::string, double>>> tuples) {
    for (auto& t : tuples) rep.ratio_table.push_back({std::move(t), 0.0, 0.0, true});
    ratios.assign(rep.ratio_table.size(), std::vector<double>(static_cast<std::size_t>(S), 0.0));
  };

  switch (opt.lemma) {
    case Lemma::Strichartz: {
      const GridSpec g{3, 16};
      const std::vector<double> Ms{2, 4, 8};
      table({{{"M", 2}, {"p", 4}}, {{"M", 4}, {"p", 4}}, {{"M", 8}, {"p", 4}}});
      detail::for_each_sample(S, opt.seed, opt.threads, [&](int i, Rng& rng) {
        const auto f = random_coherent_band_limited(g, 8, rng);
        for (std::size_t t = 0; t < Ms.size(); ++t)
          ratios[t][static_cast<std::size_t>(i)] = strichartz_ratio(f, Ms[t], 4.0, opt.T, std::max(opt.nt, 32));
      });
      break;
    }
    case Lemma::Bilinear: {
      const GridSpec g{3, 16};
      const std::vector<std::pair<double, double>> Ms{{2, 2}, {4, 2}, {8, 2}, {4, 4}, {8, 4}};
      std::vector<std::vector<std::pair<std::string, double>>> tuples;
      for (auto [m1, m2] : Ms) tuples.push_back({{"M1", m1}, {"M2", m2}, {"delta", opt.delta}});
      table(tuples);
      detail::for_each_sample(S, opt.seed, opt.threads, [&](int i, Rng& rng) {
        for (std::size_t t = 0; t < Ms.size(); ++t) {
          const auto f1 = dyadic_project(random_coherent_band_limited(g, static_cast<int>(Ms[t].first), rng), Ms[t].first);
          const auto f2 = dyadic_project(random_coherent_band_limited(g, static_cast<int>(Ms[t].second), rng), Ms[t].second);
          ratios[t][static_cast<std::size_t>(i)] =
              bilinear_strichartz_ratio(f1, f2, Ms[t].first, Ms[t].second, opt.delta, opt.T, opt.nt);
        }
      });
      break;
    }
    case Lemma::RefinedSobolev: {
      const GridSpec g{3, 24};
      std::vector<std::array<double, 3>> tuples;
      std::vector<std::vector<std::pair<std::string, double>>> named;
      for (double M : {4.0, 8.0})
        for (double R : {16.0, 32.0})
          for (int which : {1, 2, 3}) {
            tuples.push_back({M, R, static_cast<double>(which)});
            named.push_back({{"M", M}, {"R", R}, {"which", which}});
          }
      table(named);
      detail::for_each_sample(S, opt.seed, opt.threads, [&](int i, Rng& rng) {
        const auto phi = detail::mean_zero(random_coherent_band_limited(g, 10, rng));
        std::map<double, RefinedSobolevData> by_M;
        for (double M : {4.0, 8.0}) by_M[M] = refined_sobolev_data(phi, M);
        for (std::size_t t = 0; t < tuples.size(); ++t) {
          const double M = tuples[t][0], R = tuples[t][1];
          const int which = static_cast<int>(tuples[t][2]);
          const auto& data = by_M[M];
          const RefinedSobolevParts p{data.lhs[static_cast<std::size_t>(which - 1)], data.grad,
                                      intermediate_gradient(phi, M, R), data.grad_high};
          ratios[t][static_cast<std::size_t>(i)] = p.lhs == 0.0 ? 0.0 : p.lhs / refined_sobolev_rhs(p, M, R, which);
        }
      });
      break;
    }
    case Lemma::Multilinear: {
      const GridSpec g{3, 8};
      struct Row {
        MultilinearVariant v;
        double M0;
      };
      const std::vector<Row> rows{{MultilinearVariant::MLFL1, 1}, {MultilinearVariant::MLFL1, 2},
                                  {MultilinearVariant::MLFL2, 1}, {MultilinearVariant::MLFL2, 2},
                                  {MultilinearVariant::Old1, 0},  {MultilinearVariant::Old2, 0}};
      std::vector<std::vector<std::pair<std::string, double>>> named;
      for (const auto& r : rows)
        named.push_back({{"variant", static_cast<double>(r.v)}, {"M0", r.M0}, {"T", opt.T}});
      table(named);
      detail::for_each_sample(S, opt.seed, opt.threads, [&](int i, Rng& rng) {
        std::array<TorusField, 5> f{TorusField(g), TorusField(g), TorusField(g), TorusField(g), TorusField(g)};
        for (auto& x : f) x = random_coherent_band_limited(g, g.n / 4, rng);
        const auto lhs = multilinear_lhs(f, opt.T, opt.nt);
        for (std::size_t t = 0; t < rows.size(); ++t) {
          const double num = uses_hminus(rows[t].v) ? lhs.l1_hminus : lhs.l1_hplus;
          ratios[t][static_cast<std::size_t>(i)] = num / multilinear_rhs(f, rows[t].M0, opt.T, rows[t].v);
        }
      });
      break;
    }
    case Lemma::ApproxIdentity: {
      const GridSpec g{1, 512};
      const std::vector<double> alphas{0.25, 0.125, 0.0625};
      table({{{"alpha", alphas[0]}}, {{"alpha", alphas[1]}}, {{"alpha", alphas[2]}}});
      std::vector<double> slopes(static_cast<std::size_t>(S), 0.0);
      detail::for_each_sample(S, opt.seed, opt.threads, [&](int i, Rng& rng) {
        const auto phi = random_band_limited(g, 8, rng, 2.0);
        const auto a = random_band_limited(g, 8, rng);
        const auto b = random_band_limited(g, 8, rng);
        for (std::size_t t = 0; t < alphas.size(); ++t)
          ratios[t][static_cast<std::size_t>(i)] = approx_identity_ratio(phi, a, b, alphas[t]);
        slopes[static_cast<std::size_t>(i)] = approx_identity_rate(phi, a, b, alphas);
      });
      rep.min_slope = *std::min_element(slopes.begin(), slopes.end());
      break;
    }
  }
  summarize(rep, ratios, opt.growth_limit);
  return rep;
}

}  // namespace quintic
