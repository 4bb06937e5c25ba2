#pragma once

// k-particle marginals as matrices over the k-slot grid basis. The matrix
// of gamma^{(k)} is w^k gamma(x, x') with w = (2pi/n)^d, so matrix traces,
// eigenvalues and singular values are those of the integral operator.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <vector>

#include "quintic/manybody.hpp"
#include "quintic/nls.hpp"

namespace quintic {

struct KthMarginal {
  int k = 1;
  GridSpec grid;
  Eigen::MatrixXcd matrix;

  double dx_weight() const { return grid.cell_volume(); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

namespace detail {

// Row-major view of psi as a (G^k) x (G^{N-k}) matrix.
inline Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> reshape(
    const BosonicState& psi, int k) {
  const auto rows = static_cast<Eigen::Index>(state_size(psi.grid, k));
  const auto cols = static_cast<Eigen::Index>(state_size(psi.grid, psi.N - k));
  return {psi.amps.data(), rows, cols};
}

inline std::vector<int> digits(std::size_t lin, int count, std::size_t base) {
  std::vector<int> out(static_cast<std::size_t>(count));
  for (int i = count - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(lin % base);
    lin /= base;
  }
  return out;
}

// Per-axis grid indices of every slot of a k-slot basis index.
inline std::vector<std::vector<int>> slot_axes(const GridSpec& g, int k) {
  const std::size_t S = state_size(g, k);
  std::vector<std::vector<int>> out(S);
  for_each_index(g.d * k, g.n, [&](std::size_t lin, const int* idx) { out[lin].assign(idx, idx + g.d * k); });
  return out;
}

}  // namespace detail

// gamma^{(k)}(x, x') = int psi(x, y) conj(psi(x', y)) dy.
inline KthMarginal marginal(const BosonicState& psi, int k) {
  require(k >= 1 && k <= psi.N, "marginal order must be in 1..N");
  auto A = detail::reshape(psi, k);
  KthMarginal m{k, psi.grid, {}};
  m.matrix = psi.weight() * (A * A.adjoint());
  return m;
}

// |phi><phi|^{tensor k}
inline KthMarginal factorized_marginal(const TorusField& phi, int k) {
  auto s = factorized_state(phi, k);
  Eigen::Map<const Eigen::VectorXcd> v(s.amps.data(), static_cast<Eigen::Index>(s.amps.size()));
  KthMarginal m{k, phi.grid(), {}};
  m.matrix = s.weight() * (v * v.adjoint());
  return m;
}

// Tr_k: traces out the last slot.
inline KthMarginal partial_trace(const KthMarginal& m) {
  require(m.k >= 2, "cannot trace out the only slot");
  const auto G = static_cast<Eigen::Index>(m.grid.size());
  const Eigen::Index R = m.matrix.rows() / G;
  KthMarginal out{m.k - 1, m.grid, Eigen::MatrixXcd::Zero(R, R)};
  for (Eigen::Index c = 0; c < R; ++c)
    for (Eigen::Index r = 0; r < R; ++r) {
      Complex s = 0.0;
      for (Eigen::Index z = 0; z < G; ++z) s += m.matrix(r * G + z, c * G + z);
      out.matrix(r, c) = s;
    }
  return out;
}

inline double trace_norm(const Eigen::MatrixXcd& a) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues().sum();
}

// Tr|a - b| via the full singular value decomposition.
inline double trace_distance(const KthMarginal& a, const KthMarginal& b) {
  require(a.matrix.rows() == b.matrix.rows() && a.matrix.cols() == b.matrix.cols(), "marginal shapes differ");
  return trace_norm(a.matrix - b.matrix);
}

struct MarginalDiagnostics {
  double hermitian_residual = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  double symmetry_residual = 0.0;
};

inline MarginalDiagnostics diagnose(const KthMarginal& m) {
  MarginalDiagnostics d;
  d.hermitian_residual = (m.matrix - m.matrix.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(m.matrix.trace() - Complex(1.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m.matrix + m.matrix.adjoint()), Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  // simultaneous exchange of adjacent slots on both sides
  const std::size_t G = m.grid.size();
  for (int s = 0; s + 1 < m.k; ++s) {
    std::vector<Eigen::Index> perm(m.dim());
    for (std::size_t lin = 0; lin < m.dim(); ++lin) {
      auto dg = detail::digits(lin, m.k, G);
      std::swap(dg[static_cast<std::size_t>(s)], dg[static_cast<std::size_t>(s) + 1]);
      std::size_t t = 0;
      for (int v : dg) t = t * G + static_cast<std::size_t>(v);
      perm[lin] = static_cast<Eigen::Index>(t);
    }
    for (Eigen::Index r = 0; r < m.matrix.rows(); ++r)
      for (Eigen::Index c = 0; c < m.matrix.cols(); ++c)
        d.symmetry_residual =
            std::max(d.symmetry_residual, std::abs(m.matrix(r, c) - m.matrix(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)])));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Hierarchy residuals

namespace detail {

// Applies the k-slot kinetic operator sum_j (-Laplacian_j) to every column.
inline Eigen::MatrixXcd kinetic_rows(const Eigen::MatrixXcd& M, const GridSpec& g, int k) {
  const int rank = g.d * k;
  const auto symbol = tabulate_symbol(rank, g.n, [&](const int* xi) { return squared_norm(xi, rank); });
  Eigen::MatrixXcd out = M;
  std::vector<Complex> col(static_cast<std::size_t>(M.rows()));
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) col[static_cast<std::size_t>(r)] = M(r, c);
    fft::apply_symbol(col, rank, g.n, symbol);
    for (Eigen::Index r = 0; r < M.rows(); ++r) out(r, c) = col[static_cast<std::size_t>(r)];
  }
  return out;
}

}  // namespace detail

// Right side of the BBGKY equation for gamma^{(k)} of the discrete dynamics:
//   sum_j [-Lap_j, g_k] + N^{-2} sum_{i<j<l<=k} [V, g_k]
//   + (N-k)/N^2 sum_{i<j<=k} Tr_{k+1} [W(x_i-x_j, x_i-x_{k+1}), g_{k+1}]
//   + (N-k)(N-k-1)/(2N^2) sum_{j<=k} Tr_{k+1,k+2} [W(x_j-x_{k+1}, x_j-x_{k+2}), g_{k+2}]
// The contractions are evaluated directly from psi, never forming g_{k+1}, g_{k+2}.
inline Eigen::MatrixXcd bbgky_rhs(const Hamiltonian& H, const BosonicState& psi, int k) {
  const int N = psi.N;
  require(k >= 1 && k <= N - 2, "BBGKY residual needs 1 <= k <= N-2");
  const auto& g = psi.grid;
  const int d = g.d;
  const int n = g.n;
  const auto& W = H.potential();
  const std::size_t G = g.size();
  const double w = psi.weight();
  const double NN = static_cast<double>(N) * N;

  const auto A = detail::reshape(psi, k);
  Eigen::MatrixXcd M = w * (A * A.adjoint());
  const Eigen::MatrixXcd KM = detail::kinetic_rows(M, g, k);
  Eigen::MatrixXcd rhs = KM - KM.adjoint();

  const auto rows = detail::slot_axes(g, k);
  const auto single = detail::slot_axes(g, 1);
  const std::size_t R = rows.size();

  // intra-cluster triples
  if (k >= 3) {
    std::vector<double> vin(R, 0.0);
    for (std::size_t r = 0; r < R; ++r)
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
          for (int l = j + 1; l < k; ++l)
            vin[r] += W(relative_index(&rows[r][i * d], &rows[r][j * d], d, n),
                        relative_index(&rows[r][i * d], &rows[r][l * d], d, n)) / NN;
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < R; ++c) rhs(r, c) += (vin[r] - vin[c]) * M(r, c);
  }

  const Eigen::Index cols = A.cols();
  // one contraction: weight f(r, z) on column blocks indexed by z = slot k+1
  if (k >= 2) {
    const std::size_t rest = static_cast<std::size_t>(cols) / G;
    Eigen::MatrixXcd FA = A;
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t z = 0; z < G; ++z) {
        double f = 0.0;
        for (int i = 0; i < k; ++i)
          for (int j = i + 1; j < k; ++j)
            f += W(relative_index(&rows[r][i * d], &rows[r][j * d], d, n),
                   relative_index(&rows[r][i * d], single[z].data(), d, n));
        for (std::size_t y = 0; y < rest; ++y) FA(r, z * rest + y) *= f;
      }
    const Eigen::MatrixXcd P = FA * A.adjoint();
    rhs += ((N - k) / NN) * w * (P - P.adjoint());
  }

  // two contractions: weight g(r, z1, z2) on column blocks (z1, z2)
  {
    const std::size_t rest = static_cast<std::size_t>(cols) / (G * G);
    Eigen::MatrixXcd GA = A;
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t z1 = 0; z1 < G; ++z1)
        for (std::size_t z2 = 0; z2 < G; ++z2) {
          double f = 0.0;
          for (int j = 0; j < k; ++j)
            f += W(relative_index(&rows[r][j * d], single[z1].data(), d, n),
                   relative_index(&rows[r][j * d], single[z2].data(), d, n));
          for (std::size_t y = 0; y < rest; ++y) GA(r, (z1 * G + z2) * rest + y) *= f;
        }
    const Eigen::MatrixXcd P = GA * A.adjoint();
    rhs += ((N - k) * (N - k - 1) / (2.0 * NN)) * w * (P - P.adjoint());
  }
  return rhs;
}

// Frobenius norm of i d/dt gamma^{(k)} (centered difference) minus the
// BBGKY right side, maximized over interior snapshots.
inline double bbgky_residual(const Hamiltonian& H, const std::vector<BosonicState>& snaps,
                             const std::vector<double>& times, int k) {
  require(snaps.size() >= 3 && snaps.size() == times.size(), "need at least 3 snapshots with times");
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < snaps.size(); ++j) {
    const Eigen::MatrixXcd dM = (marginal(snaps[j + 1], k).matrix - marginal(snaps[j - 1], k).matrix) /
                                (times[j + 1] - times[j - 1]);
    const Eigen::MatrixXcd res = Complex(0.0, 1.0) * dM - bbgky_rhs(H, snaps[j], k);
    worst = std::max(worst, res.norm());
  }
  return worst;
}

// Tensor power |phi><phi|^{tensor j} evaluated entrywise, for orders too
// large to store.
struct FactorizedKernel {
  const TorusField* phi;
  int order;

  // matrix entry at row slots a and column slots b (grid indices)
  Complex operator()(const std::size_t* a, const std::size_t* b) const {
    Complex p = std::pow(phi->grid().cell_volume(), order);
    for (int i = 0; i < order; ++i) p *= (*phi)[a[i]] * std::conj((*phi)[b[i]]);
    return p;
  }
};

// GP residual for gamma^{(j)} = |phi><phi|^{tensor j} along an NLS trajectory:
// Frobenius norm of i d/dt gamma^{(k)} - sum_j [-Lap_j, gamma^{(k)}]
// - b0 sum_j (B+ - B-) gamma^{(k+2)}, maximized over interior snapshots.
// The contractions put x_{k+1} = x_{k+2} = x_j at one grid point and carry
// the discrete delta weight w^{-2}.
inline double gp_residual(const Trajectory& traj, int k, double b0) {
  require(traj.states.size() >= 3, "need at least 3 snapshots");
  require(k >= 1, "k must be positive");
  const auto& g = traj.config.grid;
  const std::size_t G = g.size();
  const std::size_t S = state_size(g, k);
  require(S * S <= kMaxStateEntries, "gamma^{(k)} too large");
  const double w = g.cell_volume();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < traj.states.size(); ++j) {
    const TorusField& phi = traj.states[j];
    TorusField idot = phi;
    const double h2 = traj.times[j + 1] - traj.times[j - 1];
    for (std::size_t i = 0; i < G; ++i)
      idot[i] = Complex(0.0, 1.0) * (traj.states[j + 1][i] - traj.states[j - 1][i]) / h2;
    const TorusField lap = apply_multiplier(phi, [&](const int* xi) { return squared_norm(xi, g.d); });
    const FactorizedKernel big{&phi, k + 2};
    std::vector<std::size_t> ra(static_cast<std::size_t>(k) + 2), rb(static_cast<std::size_t>(k) + 2);
    double sum2 = 0.0;
    for (std::size_t r = 0; r < S; ++r) {
      const auto a = detail::digits(r, k, G);
      for (std::size_t c = 0; c < S; ++c) {
        const auto b = detail::digits(c, k, G);
        Complex pa = 1.0;
        Complex pb = 1.0;
        for (int i = 0; i < k; ++i) {
          pa *= phi[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
          pb *= std::conj(phi[static_cast<std::size_t>(b[static_cast<std::size_t>(i)])]);
        }
        Complex val = 0.0;
        for (int s = 0; s < k; ++s) {
          const auto as = static_cast<std::size_t>(a[static_cast<std::size_t>(s)]);
          const auto bs = static_cast<std::size_t>(b[static_cast<std::size_t>(s)]);
          // Leibniz rule on the tensor power, slot s differentiated
          Complex left = 1.0, right = 1.0;
          for (int i = 0; i < k; ++i) {
            if (i == s) continue;
            left *= phi[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
            right *= std::conj(phi[static_cast<std::size_t>(b[static_cast<std::size_t>(i)])]);
          }
          const Complex term_t = idot[as] * left * pb - pa * std::conj(idot[bs]) * right;
          const Complex term_k = lap[as] * left * pb - pa * std::conj(lap[bs]) * right;
          val += std::pow(w, k) * (term_t - term_k);
          // B+ : x_{k+1} = x_{k+2} = x_s on both sides; B- : = x'_s
          for (int i = 0; i < k; ++i) {
            ra[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a[static_cast<std::size_t>(i)]);
            rb[static_cast<std::size_t>(i)] = static_cast<std::size_t>(b[static_cast<std::size_t>(i)]);
          }
          ra[static_cast<std::size_t>(k)] = ra[static_cast<std::size_t>(k) + 1] = as;
          rb[static_cast<std::size_t>(k)] = rb[static_cast<std::size_t>(k) + 1] = as;
          const Complex bplus = big(ra.data(), rb.data()) / (w * w);
          ra[static_cast<std::size_t>(k)] = ra[static_cast<std::size_t>(k) + 1] = bs;
          rb[static_cast<std::size_t>(k)] = rb[static_cast<std::size_t>(k) + 1] = bs;
          const Complex bminus = big(ra.data(), rb.data()) / (w * w);
          val -= b0 * (bplus - bminus);
        }
        sum2 += std::norm(val);
      }
    }
    worst = std::max(worst, std::sqrt(sum2));
  }
  return worst;
}

// The NLS residual r of the solver, lifted to w (r(x) conj(phi(x')) - phi(x) conj(r(x'))).
inline double lifted_nls_residual(const Trajectory& traj, double b0) {
  const auto& g = traj.config.grid;
  const double w = g.cell_volume();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < traj.states.size(); ++j) {
    const TorusField r = nls_residual(traj, j, b0);
    const TorusField& phi = traj.states[j];
    double s = 0.0;
    for (std::size_t x = 0; x < g.size(); ++x)
      for (std::size_t y = 0; y < g.size(); ++y) s += std::norm(w * (r[x] * std::conj(phi[y]) - phi[x] * std::conj(r[y])));
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// HUFL

// Tr S^{(1,k)} P_{>M}^{(k)} gamma P_{>M}^{(k)} S^{(1,k)}, computed as Tr(A^2 gamma)
// with A^2 = prod_j <xi_j>^2 1[|xi_j| > M] applied along the rows.
inline double hufl_lhs(const KthMarginal& m, double M) {
  const int d = m.grid.d;
  const int rank = d * m.k;
  const auto symbol = tabulate_symbol(rank, m.grid.n, [&](const int* xi) {
    double p = 1.0;
    for (int j = 0; j < m.k; ++j) {
      if (sup_norm(xi + j * d, d) <= M) return 0.0;
      p *= 1.0 + squared_norm(xi + j * d, d);
    }
    return p;
  });
  std::vector<Complex> col(m.dim());
  double tr = 0.0;
  for (Eigen::Index c = 0; c < m.matrix.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.matrix.rows(); ++r) col[static_cast<std::size_t>(r)] = m.matrix(r, c);
    fft::apply_symbol(col, rank, m.grid.n, symbol);
    tr += col[static_cast<std::size_t>(c)].real();
  }
  return tr;
}

struct HuflResult {
  int k = 0;
  double lhs = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};

inline std::vector<HuflResult> hufl_check(const std::vector<KthMarginal>& gammas, double M, double eps) {
  std::vector<HuflResult> out;
  for (const auto& g : gammas) {
    HuflResult r;
    r.k = g.k;
    r.lhs = hufl_lhs(g, M);
    r.bound = std::pow(eps, 2 * g.k);
    r.satisfied = r.lhs <= r.bound;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Propagation of chaos

// Mean-field limit of the three-body Hamiltonian with a smeared potential:
// i phi_t = -Lap phi + (1/2) U phi, U(x) = int int W(x-y, x-z) |phi(y)|^2 |phi(z)|^2.
inline TorusField hartree_potential(const PotentialTable& W, const TorusField& phi) {
  const auto& g = phi.grid();
  const std::size_t G = g.size();
  const auto axes = detail::slot_axes(g, 1);
  std::vector<double> rho(G);
  for (std::size_t i = 0; i < G; ++i) rho[i] = std::norm(phi[i]);
  const double w = g.cell_volume();
  TorusField U(g);
  for (std::size_t x = 0; x < G; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < G; ++y) {
      if (rho[y] == 0.0) continue;
      const std::size_t a = relative_index(axes[x].data(), axes[y].data(), g.d, g.n);
      double t = 0.0;
      for (std::size_t z = 0; z < G; ++z) t += W(a, relative_index(axes[x].data(), axes[z].data(), g.d, g.n)) * rho[z];
      s += rho[y] * t;
    }
    U[x] = s * w * w;
  }
  return U;
}

// Strang splitting for the Hartree comparator; the potential step is an
// exact phase rotation because U depends on |phi| only.
inline TorusField evolve_hartree(const PotentialTable& W, TorusField phi, double T, double dt) {
  const long steps = step_count(T, dt);
  const auto& g = phi.grid();
  std::vector<Complex> kin(g.size());
  for_each_frequency(g.d, g.n, [&](std::size_t lin, const int* xi) { kin[lin] = std::polar(1.0, -dt * squared_norm(xi, g.d)); });
  auto half = [&](TorusField& f) {
    const auto U = hartree_potential(W, f);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= std::polar(1.0, -0.25 * dt * U[i].real());
  };
  for (long s = 0; s < steps; ++s) {
    half(phi);
    fft::apply_symbol(phi.values(), g.d, g.n, kin);
    half(phi);
  }
  return phi;
}

enum class MeanField { Nls, Hartree };

struct ChaosOptions {
  GridSpec grid;
  double beta = 0.1;
  PotentialSpec potential;
  double T = 0.2;
  int steps = 10;
  MeanField comparator = MeanField::Nls;
  double mean_field_dt = 1e-4;
};

struct ChaosRow {
  int N = 0;
  double t = 0.0;
  double trace_distance = 0.0;
  double energy_per_particle = 0.0;
  double coupling = 0.0;
  bool tolerance_met = true;
};

// For each N: psi_N(0) = phi0^{tensor N}, propagate to T, compare gamma_N^{(1)}(T)
// with |phi(T)><phi(T)|. The NLS comparator uses coupling b0_grid / 2: for
// the sum over unordered triples with prefactor N^{-2}, the energy per
// particle of phi^{tensor N} tends to int |grad phi|^2 + (b0/6) int |phi|^6.
inline ChaosRow chaos_row(int N, const ChaosOptions& opt, const TorusField& phi0) {
  require(std::abs(l2_norm(phi0) - 1.0) < 1e-10, "phi0 must be normalized");
  ManyBodyConfig cfg{opt.grid, N, opt.beta, opt.potential};
  Hamiltonian H(cfg);
  ChaosRow row;
  row.N = N;
  row.t = opt.T;
  auto psi = factorized_state(phi0, N);
  PropagationReport rep;
  psi = propagate(H, psi, opt.T, opt.steps, PropagationMethod::Krylov, &rep);
  row.tolerance_met = rep.tolerance_met;
  row.energy_per_particle = energy_per_particle(H, psi);
  TorusField phiT = phi0;
  if (opt.T > 0.0) {
    const double dt = opt.T / std::max(1.0, std::round(opt.T / opt.mean_field_dt));
    if (opt.comparator == MeanField::Nls) {
      row.coupling = 0.5 * H.potential().b0_grid;
      phiT = evolve(phi0, opt.T, {opt.grid, row.coupling, dt, false}, 1 << 30).states.back();
    } else {
      row.coupling = 0.5;
      phiT = evolve_hartree(H.potential(), phi0, opt.T, dt);
    }
  }
  row.trace_distance = trace_distance(marginal(psi, 1), factorized_marginal(phiT, 1));
  return row;
}

inline std::vector<ChaosRow> chaos_experiment(const std::vector<int>& Ns, const ChaosOptions& opt, const TorusField& phi0) {
  std::vector<ChaosRow> rows;
  for (int N : Ns) rows.push_back(chaos_row(N, opt, phi0));
  return rows;
}

}  // namespace quintic
