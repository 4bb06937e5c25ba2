#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "quintic/spectral.hpp"

namespace quintic {

struct NlsConfig {
  GridSpec grid;
  double b0 = 1.0;
  double dt = 1e-3;
  bool dealias = false;
};

inline void validate(const NlsConfig& cfg) {
  validate(cfg.grid);
  require(cfg.b0 >= 0.0, "b0 must be nonnegative");
  require(cfg.dt > 0.0, "dt must be positive");
}

struct Trajectory {
  std::vector<double> times;
  std::vector<TorusField> states;
  NlsConfig config;
};

// e^{it Laplacian}: coefficients times e^{-it|xi|^2}.
inline TorusField free_propagate(const TorusField& f, double t) {
  const int d = f.grid().d;
  return apply_multiplier(f, [&](const int* xi) { return std::polar(1.0, -t * squared_norm(xi, d)); });
}

namespace detail {

inline void rotate_phase(std::vector<Complex>& v, double b0, double tau) {
  for (auto& z : v) {
    const double a2 = std::norm(z);
    z *= std::polar(1.0, -b0 * a2 * a2 * tau);
  }
}

}  // namespace detail

// Strang splitting with cached linear symbol. The nonlinear substep is the
// exact flow of i u_t = b0 |u|^4 u, a pointwise phase rotation.
class StrangStepper {
 public:
  explicit StrangStepper(const NlsConfig& cfg) : cfg_(cfg) {
    validate(cfg);
    const int d = cfg.grid.d;
    symbol_.resize(cfg.grid.size());
    for_each_frequency(d, cfg.grid.n, [&](std::size_t lin, const int* xi) {
      symbol_[lin] = std::polar(1.0, -cfg.dt * squared_norm(xi, d));
    });
    if (cfg.dealias) {
      padded_n_ = 3 * cfg.grid.n / 2;
      padded_n_ += padded_n_ % 2;
    }
  }

  void step(TorusField& f) const {
    half_nonlinear(f);
    fft::apply_symbol(f.values(), cfg_.grid.d, cfg_.grid.n, symbol_);
    half_nonlinear(f);
  }

  const NlsConfig& config() const { return cfg_; }

 private:
  void half_nonlinear(TorusField& f) const {
    if (cfg_.b0 == 0.0) return;
    if (!cfg_.dealias) {
      detail::rotate_phase(f.values(), cfg_.b0, 0.5 * cfg_.dt);
      return;
    }
    // 2/3-rule: rotate on a 3/2-padded grid, then truncate back.
    auto padded = resample(f, padded_n_);
    detail::rotate_phase(padded.values(), cfg_.b0, 0.5 * cfg_.dt);
    f = resample(padded, cfg_.grid.n);
  }

  NlsConfig cfg_;
  std::vector<Complex> symbol_;
  int padded_n_ = 0;
};

inline TorusField strang_step(const TorusField& f, const NlsConfig& cfg) {
  require(f.grid() == cfg.grid, "field grid does not match config");
  TorusField out = f;
  StrangStepper(cfg).step(out);
  return out;
}

inline bool all_finite(const TorusField& f) {
  for (const auto& v : f.values())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

inline long step_count(double T, double dt) {
  require(T >= 0.0, "final time must be nonnegative");
  const double k = std::round(T / dt);
  require(std::abs(k * dt - T) <= 1e-9 * std::max(1.0, T), "final time must be a multiple of dt");
  return static_cast<long>(k);
}

inline Trajectory evolve(const TorusField& f0, double T, const NlsConfig& cfg, int snapshot_every = 1) {
  require(snapshot_every >= 1, "snapshot_every must be at least 1");
  require(f0.grid() == cfg.grid, "initial datum grid does not match config");
  const long steps = step_count(T, cfg.dt);
  StrangStepper stepper(cfg);
  Trajectory traj;
  traj.config = cfg;
  traj.times.push_back(0.0);
  traj.states.push_back(f0);
  TorusField f = f0;
  for (long s = 1; s <= steps; ++s) {
    stepper.step(f);
    if (s % snapshot_every == 0 || s == steps) {
      if (!all_finite(f)) throw Error(ErrorKind::BlowUp, "non-finite values at t = " + std::to_string(s * cfg.dt));
      traj.times.push_back(static_cast<double>(s) * cfg.dt);
      traj.states.push_back(f);
    }
  }
  return traj;
}

inline double sextic_integral(const TorusField& f) {
  double s = 0.0;
  for (const auto& v : f.values()) {
    const double a = std::norm(v);
    s += a * a * a;
  }
  return s * f.grid().cell_volume();
}

inline double mass(const TorusField& f) {
  const double m = l2_norm(f);
  return m * m;
}

inline double energy_nls(const TorusField& f, double b0) {
  return gradient_energy(f) + b0 / 3.0 * sextic_integral(f);
}

// Which kinetic piece goes into E_L. Low is the default; High reproduces
// the alternative bookkeeping with the high-frequency gradient in E_L.
enum class KineticAssignment { Low, High };

struct EnergySplit {
  double low = 0.0;
  double high = 0.0;
};

inline EnergySplit energy_split(const TorusField& f, double M, double b0,
                                KineticAssignment kinetic = KineticAssignment::Low) {
  const TorusField lo = project_leq(f, M);
  const TorusField hi = project_gt(f, M);
  double interaction = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Complex L = lo[i];
    const Complex H = hi[i];
    const Complex Lb = std::conj(L);
    const Complex Hb = std::conj(H);
    const double l2 = std::norm(L);
    const double h2 = std::norm(H);
    Complex s = l2 * l2 * l2;
    s += 3.0 * l2 * l2 * (Lb * H + L * Hb);
    s += 3.0 * l2 * (H * H * Lb * Lb + Hb * Hb * L * L);
    s += 9.0 * h2 * l2 * l2;
    interaction += s.real();
  }
  interaction *= f.grid().cell_volume();
  const double kinetic_part = kinetic == KineticAssignment::Low ? gradient_energy(lo) : gradient_energy(hi);
  EnergySplit e;
  e.low = kinetic_part + b0 / 3.0 * interaction;
  e.high = energy_nls(f, b0) - e.low;
  return e;
}

struct FrequencyDiagnostics {
  double high_kinetic = 0.0;
  double intermediate_kinetic = 0.0;
};

inline FrequencyDiagnostics frequency_diagnostics(const TorusField& f, double M, double R) {
  require(M <= R, "frequency_diagnostics needs M <= R");
  const int d = f.grid().d;
  FrequencyDiagnostics out;
  out.high_kinetic = spectral_energy(f, [&](const int* xi) { return sup_norm(xi, d) > M ? squared_norm(xi, d) : 0.0; });
  out.intermediate_kinetic = spectral_energy(f, [&](const int* xi) {
    const int s = sup_norm(xi, d);
    return (s > M && s < R) ? squared_norm(xi, d) : 0.0;
  });
  return out;
}

// Smallest dyadic M below Nyquist with sup_t ||P_{>M} grad u(t)||_{L^2} <= eps.
// P_{>n/2} is empty on the grid, so the Nyquist level carries no
// information and is never returned.
inline std::optional<int> utfl_probe(const Trajectory& traj, double eps) {
  require(!traj.states.empty(), "empty trajectory");
  require(eps > 0.0, "eps must be positive");
  const int nyq = traj.config.grid.n / 2;
  for (int M = 1; M < nyq; M *= 2) {
    double worst = 0.0;
    for (const auto& u : traj.states) worst = std::max(worst, std::sqrt(frequency_diagnostics(u, M, M).high_kinetic));
    if (worst <= eps) return M;
  }
  return std::nullopt;
}

struct LowDrift {
  double max_rate = 0.0;
  double fitted_C = 0.0;
  double C1 = 1.0;
};

inline LowDrift energy_low_drift(const Trajectory& traj, double M) {
  require(traj.states.size() >= 3, "energy_low_drift needs at least 3 snapshots");
  const double b0 = traj.config.b0;
  std::vector<double> el;
  double grad_sup = 0.0;
  for (const auto& u : traj.states) {
    el.push_back(energy_split(u, M, b0).low);
    grad_sup = std::max(grad_sup, std::sqrt(gradient_energy(u)));
  }
  LowDrift out;
  for (std::size_t i = 1; i + 1 < el.size(); ++i) {
    const double rate = std::abs(el[i + 1] - el[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
    out.max_rate = std::max(out.max_rate, rate);
  }
  out.C1 = std::max(grad_sup, 1.0);
  out.fitted_C = out.max_rate / (std::pow(out.C1, 10) * M * M);
  return out;
}

// -Laplacian phi + b0 |phi|^4 phi
inline TorusField nls_rhs(const TorusField& f, double b0) {
  const int d = f.grid().d;
  TorusField out = apply_multiplier(f, [&](const int* xi) { return squared_norm(xi, d); });
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::norm(f[i]);
    out[i] += b0 * a * a * f[i];
  }
  return out;
}

// i (u_{j+1} - u_{j-1}) / (2h) - rhs(u_j) at an interior snapshot j.
inline TorusField nls_residual(const Trajectory& traj, std::size_t j, double b0) {
  require(j >= 1 && j + 1 < traj.states.size(), "residual needs an interior snapshot");
  const double h2 = traj.times[j + 1] - traj.times[j - 1];
  TorusField r = nls_rhs(traj.states[j], b0);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = Complex(0.0, 1.0) * (traj.states[j + 1][i] - traj.states[j - 1][i]) / h2 - r[i];
  return r;
}

}  // namespace quintic
