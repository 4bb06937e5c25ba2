#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "quintic/field.hpp"
#include "quintic/potential.hpp"

namespace quintic {

inline constexpr std::size_t kMaxStateEntries = std::size_t{1} << 24;

struct ManyBodyConfig {
  GridSpec grid;
  int N = 3;
  double beta = 0.05;
  PotentialSpec potential;
};

inline std::size_t state_size(const GridSpec& g, int N) { return ipow(g.size(), N); }

inline void validate(const ManyBodyConfig& c) {
  validate(c.grid);
  require(c.N >= 1 && c.N <= 8, "particle count must be in 1..8");
  require(c.beta >= 0.0, "beta must be nonnegative");
  require(state_size(c.grid, c.N) <= kMaxStateEntries, "state exceeds the 2^24 entry budget");
}

// Amplitudes psi(x_1, ..., x_N) on (grid)^N, slot 1 slowest. The L^2 inner
// product carries the weight (2pi/n)^{dN}.
struct BosonicState {
  GridSpec grid;
  int N = 1;
  std::vector<Complex> amps;

  double weight() const { return std::pow(grid.cell_volume(), N); }
};

inline Complex inner(const BosonicState& a, const BosonicState& b) {
  require(a.amps.size() == b.amps.size(), "state shapes differ");
  Complex s = 0.0;
  for (std::size_t i = 0; i < a.amps.size(); ++i) s += std::conj(a.amps[i]) * b.amps[i];
  return s * a.weight();
}

inline double norm(const BosonicState& s) { return std::sqrt(std::max(0.0, inner(s, s).real())); }

inline void normalize(BosonicState& s) {
  const double m = norm(s);
  require(m > 0.0, "cannot normalize a zero state");
  for (auto& v : s.amps) v /= m;
}

inline BosonicState factorized_state(const TorusField& phi, int N) {
  BosonicState s{phi.grid(), N, {}};
  require(state_size(phi.grid(), N) <= kMaxStateEntries, "state exceeds the 2^24 entry budget");
  s.amps.assign(1, 1.0);
  for (int k = 0; k < N; ++k) {
    std::vector<Complex> next(s.amps.size() * phi.size());
    for (std::size_t i = 0; i < s.amps.size(); ++i)
      for (std::size_t j = 0; j < phi.size(); ++j) next[i * phi.size() + j] = s.amps[i] * phi[j];
    s.amps = std::move(next);
  }
  return s;
}

// Exchanges slots i and j.
inline BosonicState swap_slots(const BosonicState& s, int i, int j) {
  const std::size_t G = s.grid.size();
  BosonicState out = s;
  std::vector<std::size_t> digits(static_cast<std::size_t>(s.N));
  for (std::size_t lin = 0; lin < s.amps.size(); ++lin) {
    std::size_t r = lin;
    for (int k = s.N - 1; k >= 0; --k) {
      digits[static_cast<std::size_t>(k)] = r % G;
      r /= G;
    }
    std::swap(digits[static_cast<std::size_t>(i)], digits[static_cast<std::size_t>(j)]);
    std::size_t t = 0;
    for (int k = 0; k < s.N; ++k) t = t * G + digits[static_cast<std::size_t>(k)];
    out.amps[t] = s.amps[lin];
  }
  return out;
}

// Averages over all N! slot permutations.
inline BosonicState symmetrize(const BosonicState& s) {
  const std::size_t G = s.grid.size();
  std::vector<int> perm(static_cast<std::size_t>(s.N));
  std::iota(perm.begin(), perm.end(), 0);
  BosonicState out = s;
  std::fill(out.amps.begin(), out.amps.end(), Complex(0.0));
  std::vector<std::size_t> digits(static_cast<std::size_t>(s.N));
  int count = 0;
  do {
    ++count;
    for (std::size_t lin = 0; lin < s.amps.size(); ++lin) {
      std::size_t r = lin;
      for (int k = s.N - 1; k >= 0; --k) {
        digits[static_cast<std::size_t>(k)] = r % G;
        r /= G;
      }
      std::size_t t = 0;
      for (int k = 0; k < s.N; ++k) t = t * G + digits[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
      out.amps[t] += s.amps[lin];
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& v : out.amps) v /= static_cast<double>(count);
  return out;
}

// max over adjacent transpositions of ||psi - P psi|| / ||psi||.
inline double symmetry_residual(const BosonicState& s) {
  double worst = 0.0;
  const double m = norm(s);
  for (int i = 0; i + 1 < s.N; ++i) {
    auto t = swap_slots(s, i, i + 1);
    for (std::size_t k = 0; k < t.amps.size(); ++k) t.amps[k] -= s.amps[k];
    worst = std::max(worst, norm(t) / m);
  }
  return worst;
}

// Random symmetric normalized state from low modes, coefficients damped by
// <xi>^{-2} per slot.
inline BosonicState random_symmetric_state(const GridSpec& g, int N, int band, Rng& rng) {
  BosonicState s{g, N, std::vector<Complex>(state_size(g, N))};
  for_each_frequency(g.d * N, g.n, [&](std::size_t lin, const int* xi) {
    if (sup_norm(xi, g.d * N) > band) return;
    double w = 1.0;
    for (int k = 0; k < N; ++k) w *= 1.0 / (1.0 + squared_norm(xi + k * g.d, g.d));
    s.amps[lin] = w * rng.complex_normal();
  });
  fft::to_physical(s.amps, g.d * N, g.n);
  s = symmetrize(s);
  normalize(s);
  return s;
}

// H = sum_j (-Laplacian_j) + N^{-2} sum_{i<j<k} W(x_i - x_j, x_i - x_k),
// applied matrix-free: kinetic part through one FFT over all N d axes,
// potential as a precomputed diagonal.
class Hamiltonian {
 public:
  explicit Hamiltonian(const ManyBodyConfig& cfg)
      : cfg_(cfg), table_(build_potential(cfg.grid, cfg.N, cfg.beta, cfg.potential)) {
    validate(cfg);
    const int rank = cfg.grid.d * cfg.N;
    kinetic_ = tabulate_symbol(rank, cfg.grid.n, [&](const int* xi) { return squared_norm(xi, rank); });
    build_diagonal();
  }

  const ManyBodyConfig& config() const { return cfg_; }
  const PotentialTable& potential() const { return table_; }
  const std::vector<double>& diagonal() const { return diag_; }
  const std::vector<double>& kinetic_symbol() const { return kinetic_; }
  int rank() const { return cfg_.grid.d * cfg_.N; }

  std::vector<Complex> apply(const std::vector<Complex>& psi) const {
    std::vector<Complex> out = psi;
    fft::apply_symbol(out, rank(), cfg_.grid.n, kinetic_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += diag_[i] * psi[i];
    return out;
  }

  BosonicState apply(const BosonicState& psi) const {
    check(psi);
    return {psi.grid, psi.N, apply(psi.amps)};
  }

  // Upper bound on the spectral radius.
  double norm_bound() const {
    const double kin = static_cast<double>(rank()) * std::pow(cfg_.grid.n / 2.0, 2);
    return kin + *std::max_element(diag_.begin(), diag_.end());
  }

  void check(const BosonicState& psi) const {
    require(psi.grid == cfg_.grid && psi.N == cfg_.N, "state does not match the Hamiltonian");
    require(psi.amps.size() == diag_.size(), "state has the wrong size");
  }

 private:
  void build_diagonal() {
    const int N = cfg_.N;
    const int d = cfg_.grid.d;
    const int n = cfg_.grid.n;
    diag_.assign(state_size(cfg_.grid, N), 0.0);
    if (N < 3 || cfg_.potential.kind == PotentialSpec::Kind::Zero) return;
    const double pref = 1.0 / (static_cast<double>(N) * N);
    for_each_index(d * N, n, [&](std::size_t lin, const int* idx) {
      double s = 0.0;
      for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
          for (int k = j + 1; k < N; ++k)
            s += table_(relative_index(idx + i * d, idx + j * d, d, n), relative_index(idx + i * d, idx + k * d, d, n));
      diag_[lin] = pref * s;
    });
  }

  ManyBodyConfig cfg_;
  PotentialTable table_;
  std::vector<double> kinetic_;
  std::vector<double> diag_;
};

inline double energy(const Hamiltonian& H, const BosonicState& psi) { return inner(psi, H.apply(psi)).real(); }

inline double energy_per_particle(const Hamiltonian& H, const BosonicState& psi) {
  return energy(H, psi) / psi.N;
}

enum class PropagationMethod { Krylov, Strang };

struct PropagationReport {
  long substeps = 0;
  double max_error_estimate = 0.0;
  bool tolerance_met = true;
};

namespace detail {

inline double l2(const std::vector<Complex>& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

// One Lanczos step of e^{-i dt H} v. Returns an a-posteriori error estimate.
inline double krylov_step(const Hamiltonian& H, std::vector<Complex>& v, double dt, int m) {
  const double beta0 = l2(v);
  if (beta0 == 0.0) return 0.0;
  std::vector<std::vector<Complex>> basis;
  basis.reserve(static_cast<std::size_t>(m) + 1);
  basis.push_back(v);
  for (auto& z : basis[0]) z /= beta0;
  std::vector<double> alpha;
  std::vector<double> beta;
  double tail = 0.0;
  for (int j = 0; j < m; ++j) {
    auto w = H.apply(basis.back());
    Complex a = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) a += std::conj(basis.back()[i]) * w[i];
    alpha.push_back(a.real());
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) {
        Complex c = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) c += std::conj(q[i]) * w[i];
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
      }
    }
    const double b = l2(w);
    if (j + 1 == m || b < 1e-12 * std::max(1.0, std::abs(alpha.back()))) {
      tail = (j + 1 == m) ? b : 0.0;
      break;
    }
    beta.push_back(b);
    for (auto& z : w) z /= b;
    basis.push_back(std::move(w));
  }
  const int k = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const auto& Q = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(k);
  for (int r = 0; r < k; ++r) {
    const Complex phase = std::polar(1.0, -dt * lam(r)) * Q(0, r);
    for (int i = 0; i < k; ++i) c(i) += Q(i, r) * phase;
  }
  std::fill(v.begin(), v.end(), Complex(0.0));
  for (int i = 0; i < k; ++i) {
    const Complex ci = beta0 * c(i);
    const auto& q = basis[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < v.size(); ++p) v[p] += ci * q[p];
  }
  return tail * std::abs(c(k - 1));
}

}  // namespace detail

// e^{-itH} psi. The requested steps are refined until ||H|| dt <= 5; Krylov
// substeps whose error estimate exceeds tol are retried with halved steps.
inline BosonicState propagate(const Hamiltonian& H, const BosonicState& psi, double t, int steps,
                              PropagationMethod method = PropagationMethod::Krylov, PropagationReport* report = nullptr,
                              double tol = 1e-12) {
  H.check(psi);
  require(t >= 0.0, "propagation time must be nonnegative");
  require(steps >= 1, "steps must be positive");
  PropagationReport rep;
  BosonicState out = psi;
  if (t == 0.0) {
    if (report) *report = rep;
    return out;
  }
  long substeps = steps;
  if (method == PropagationMethod::Krylov) {
    const double limit = 5.0 / H.norm_bound();
    substeps = std::max<long>(substeps, static_cast<long>(std::ceil(t / limit - 1e-12)));
  }
  const double dt = t / static_cast<double>(substeps);
  const double norm0 = detail::l2(psi.amps);
  if (method == PropagationMethod::Strang) {
    const int rank = H.rank();
    std::vector<Complex> kin(H.kinetic_symbol().size());
    for (std::size_t i = 0; i < kin.size(); ++i) kin[i] = std::polar(1.0, -dt * H.kinetic_symbol()[i]);
    std::vector<Complex> half(H.diagonal().size());
    for (std::size_t i = 0; i < half.size(); ++i) half[i] = std::polar(1.0, -0.5 * dt * H.diagonal()[i]);
    for (long s = 0; s < substeps; ++s) {
      for (std::size_t i = 0; i < half.size(); ++i) out.amps[i] *= half[i];
      fft::apply_symbol(out.amps, rank, H.config().grid.n, kin);
      for (std::size_t i = 0; i < half.size(); ++i) out.amps[i] *= half[i];
    }
    rep.substeps = substeps;
  } else {
    const int m = static_cast<int>(std::clamp<std::size_t>((std::size_t{1} << 25) / out.amps.size(), 6, 20));
    for (long s = 0; s < substeps; ++s) {
      double remaining = dt;
      double h = dt;
      int halvings = 0;
      while (remaining > 1e-15 * dt) {
        h = std::min(h, remaining);
        auto trial = out.amps;
        const double err = detail::krylov_step(H, trial, h, m) / std::max(norm0, 1e-300);
        if (err > tol && halvings < 20) {
          h *= 0.5;
          ++halvings;
          continue;
        }
        if (err > tol) rep.tolerance_met = false;
        rep.max_error_estimate = std::max(rep.max_error_estimate, err);
        out.amps = std::move(trial);
        remaining -= h;
        ++rep.substeps;
      }
    }
  }
  if (report) *report = rep;
  return out;
}

// <psi, (H/N + 1)^k psi>, split as <A^a psi, A^b psi> with a + b = k.
inline double energy_moment(const Hamiltonian& H, const BosonicState& psi, int k) {
  require(k >= 0, "moment order must be nonnegative");
  const double N = psi.N;
  auto apply_A = [&](const BosonicState& s) {
    auto h = H.apply(s);
    for (std::size_t i = 0; i < h.amps.size(); ++i) h.amps[i] = h.amps[i] / N + s.amps[i];
    return h;
  };
  BosonicState left = psi;
  for (int i = 0; i < k / 2; ++i) left = apply_A(left);
  BosonicState right = left;
  if (k % 2 == 1) right = apply_A(right);
  return inner(left, right).real();
}

// (2pi)^{dN} sum_xi prod_j w_j(xi_j) |psi_hat|^2 for per-slot weights.
template <class Fn>
double slot_weighted_norm2(const BosonicState& psi, Fn&& slot_weight) {
  auto c = psi.amps;
  const int d = psi.grid.d;
  const int rank = d * psi.N;
  fft::to_spectral(c, rank, psi.grid.n);
  double s = 0.0;
  for_each_frequency(rank, psi.grid.n, [&](std::size_t lin, const int* xi) {
    double w = 1.0;
    for (int j = 0; j < psi.N; ++j) w *= slot_weight(j, xi + j * d);
    s += w * std::norm(c[lin]);
  });
  return s * std::pow(kTwoPi, rank);
}

struct StabilityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = false;
};

// Compares <psi, (H/N+1)^k psi> with c1^k (||S^{(1,k)} psi||^2 + N^{-1} ||S_1 S^{(1,k-1)} psi||^2);
// for k = 1 the right side is c1 ||S_1 psi||^2.
inline StabilityResult stability_check(const Hamiltonian& H, const BosonicState& psi, int k, double c1) {
  require(k >= 1 && k <= psi.N, "stability order must be in 1..N");
  require(c1 >= 0.0 && c1 <= 1.0, "c1 must lie in [0, 1]");
  const int d = psi.grid.d;
  auto bracket = [&](const int* xi) { return 1.0 + squared_norm(xi, d); };
  StabilityResult r;
  r.lhs = energy_moment(H, psi, k);
  const double sk = slot_weighted_norm2(psi, [&](int j, const int* xi) { return j < k ? bracket(xi) : 1.0; });
  if (k == 1) {
    r.rhs = c1 * sk;
  } else {
    const double mixed = slot_weighted_norm2(psi, [&](int j, const int* xi) {
      if (j == 0) return bracket(xi) * bracket(xi);
      return j < k - 1 ? bracket(xi) : 1.0;
    });
    r.rhs = std::pow(c1, k) * (sk + mixed / psi.N);
  }
  r.satisfied = r.lhs >= r.rhs;
  return r;
}

}  // namespace quintic
