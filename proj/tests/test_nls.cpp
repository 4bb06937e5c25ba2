#include <gtest/gtest.h>

#include <cmath>

#include "quintic/nls.hpp"

using namespace quintic;

namespace {

TorusField smooth_datum(const GridSpec& g, std::uint64_t seed, int band = 3, double mass_target = 1.0) {
  Rng rng(seed);
  auto f = random_band_limited(g, band, rng, 2.0);
  return (std::sqrt(mass_target) / l2_norm(f)) * f;
}

}  // namespace

TEST(FreePropagate, Examples) {
  GridSpec g{2, 16};
  auto f = smooth_datum(g, 1, 5);
  EXPECT_LT(max_abs_difference(free_propagate(f, 0.0), f), 1e-14);
  auto w = plane_wave(g, {2, -3});
  const double t = 0.37;
  auto expect = plane_wave(g, {2, -3}, std::polar(1.0, -13.0 * t));
  EXPECT_LT(max_abs_difference(free_propagate(w, t), expect), 1e-12);
  EXPECT_NEAR(l2_norm(free_propagate(f, 1.7)), l2_norm(f), 1e-13);
}

TEST(Strang, Examples) {
  GridSpec g{1, 32};
  auto f = smooth_datum(g, 2, 6);
  NlsConfig free{g, 0.0, 0.01, false};
  EXPECT_LT(max_abs_difference(strang_step(f, free), free_propagate(f, 0.01)), 1e-14);
  NlsConfig cfg{g, 1.0, 0.01, false};
  EXPECT_EQ(sup_norm(strang_step(TorusField(g), cfg)), 0.0);
}

TEST(Strang, SecondOrderRichardson) {
  GridSpec g{2, 16};
  auto f0 = smooth_datum(g, 3, 3, 4.0);
  const double T = 0.1;
  const double dt = 0.01;
  const auto reference = evolve(f0, T, {g, 1.0, dt / 64, false}, 1 << 20).states.back();
  const auto err = [&](double h) {
    return l2_norm(evolve(f0, T, {g, 1.0, h, false}, 1 << 20).states.back() - reference);
  };
  const double ratio = err(dt) / err(dt / 2);
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
}

TEST(Evolve, ZeroTimeAndSnapshots) {
  GridSpec g{1, 16};
  auto f0 = smooth_datum(g, 4);
  auto tr = evolve(f0, 0.0, {g, 1.0, 0.01, false});
  ASSERT_EQ(tr.states.size(), 1u);
  EXPECT_EQ(tr.times[0], 0.0);
  auto tr2 = evolve(f0, 0.1, {g, 1.0, 0.01, false}, 2);
  EXPECT_EQ(tr2.times.size(), 6u);
  EXPECT_NEAR(tr2.times.back(), 0.1, 1e-15);
  EXPECT_THROW(evolve(f0, 0.105, {g, 1.0, 0.01, false}), Error);
}

TEST(Evolve, PlaneWaveSolution) {
  GridSpec g{3, 8};
  const double A = 0.8;
  const std::vector<int> xi{1, 0, -2};
  const double omega = 5.0 + std::pow(A, 4);
  auto tr = evolve(plane_wave(g, xi, A), 0.5, {g, 1.0, 0.005, false});
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    auto exact = plane_wave(g, xi, A * std::polar(1.0, -omega * tr.times[j]));
    EXPECT_LT(max_abs_difference(tr.states[j], exact), 1e-11);
  }
}

TEST(Evolve, MassConservation) {
  GridSpec g{1, 64};
  auto f0 = smooth_datum(g, 5, 10, 3.0);
  NlsConfig cfg{g, 1.0, 1e-3, false};
  StrangStepper stepper(cfg);
  auto f = f0;
  const double m0 = mass(f0);
  double worst_step = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const double before = mass(f);
    stepper.step(f);
    worst_step = std::max(worst_step, std::abs(mass(f) - before) / m0);
  }
  EXPECT_LT(worst_step, 1e-12);
  EXPECT_LT(std::abs(mass(f) - m0) / m0, 1e-11);
}

TEST(Evolve, DealiasedFlagKeepsPlaneWavesExact) {
  GridSpec g{1, 16};
  auto w = plane_wave(g, {3}, 0.9);
  auto a = evolve(w, 0.2, {g, 1.0, 0.01, true}).states.back();
  auto b = evolve(w, 0.2, {g, 1.0, 0.01, false}).states.back();
  EXPECT_LT(max_abs_difference(a, b), 1e-12);
}

TEST(Energy, Examples) {
  GridSpec g{3, 8};
  EXPECT_EQ(energy_nls(TorusField(g), 1.0), 0.0);
  auto w = plane_wave(g, {1, 0, 0});
  const double vol = std::pow(kTwoPi, 3);
  EXPECT_NEAR(energy_nls(w, 0.0) / vol, 1.0, 1e-12);
  EXPECT_NEAR(energy_nls(w, 1.0) / vol, 4.0 / 3.0, 1e-12);
}

TEST(EnergySplit, Examples) {
  GridSpec g{2, 16};
  Rng rng(6);
  auto low = random_band_limited(g, 3, rng);
  auto e = energy_split(low, 4, 1.0);
  EXPECT_NEAR(e.high, 0.0, 1e-12 * energy_nls(low, 1.0));
  EXPECT_NEAR(e.low, energy_nls(low, 1.0), 1e-12 * energy_nls(low, 1.0));

  auto high = project_gt(random_band_limited(g, 8, rng), 4);
  auto eh = energy_split(high, 4, 1.0);
  EXPECT_NEAR(eh.high, gradient_energy(high) + sextic_integral(high) / 3.0, 1e-10 * eh.high);
  EXPECT_NEAR(eh.low, 0.0, 1e-10 * eh.high);

  for (int trial = 0; trial < 5; ++trial) {
    auto f = random_band_limited(g, 8, rng, 1.0);
    for (auto kin : {KineticAssignment::Low, KineticAssignment::High}) {
      auto s = energy_split(f, 2, 0.7, kin);
      EXPECT_NEAR((s.low + s.high) / energy_nls(f, 0.7), 1.0, 1e-12);
    }
  }
}

// The low interaction sum equals the sextic expansion of |phi_L + phi_H|^6
// truncated to terms with at most one high factor on each side.
TEST(EnergySplit, InteractionMatchesBruteForceExpansion) {
  GridSpec g{1, 16};
  Rng rng(7);
  auto f = random_band_limited(g, 7, rng);
  auto L = project_leq(f, 2);
  auto H = project_gt(f, 2);
  double brute = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Complex parts[2] = {L[i], H[i]};
    // choose L/H for three unbarred and three barred factors
    Complex s = 0.0;
    for (int mask = 0; mask < 64; ++mask) {
      int hu = 0;
      int hb = 0;
      Complex p = 1.0;
      for (int k = 0; k < 3; ++k) {
        const int u = (mask >> k) & 1;
        const int b = (mask >> (k + 3)) & 1;
        hu += u;
        hb += b;
        p *= parts[u] * std::conj(parts[b]);
      }
      if (hu + hb <= 1 || (hu + hb == 2)) s += p;
    }
    brute += s.real();
  }
  brute *= g.cell_volume();
  const auto e = energy_split(f, 2, 3.0);
  EXPECT_NEAR(e.low, gradient_energy(L) + brute, 1e-11 * std::abs(e.low));
}

TEST(FrequencyDiagnostics, Examples) {
  GridSpec g{2, 16};
  Rng rng(8);
  auto low = random_band_limited(g, 2, rng);
  EXPECT_NEAR(frequency_diagnostics(low, 2, 4).high_kinetic, 0.0, 1e-20);
  auto w = plane_wave(g, {3, 1});
  EXPECT_NEAR(frequency_diagnostics(w, 2, 4).intermediate_kinetic / (10.0 * g.volume()), 1.0, 1e-12);
  auto f = random_band_limited(g, 8, rng);
  double prev = INFINITY;
  for (double M : {2.0, 4.0, 8.0, 16.0}) {
    const double hk = frequency_diagnostics(f, M, M).high_kinetic;
    EXPECT_LE(hk, prev);
    prev = hk;
  }
}

TEST(FrequencyDiagnostics, FreeFlowPreservesBands) {
  GridSpec g{2, 16};
  Rng rng(9);
  auto f = random_band_limited(g, 7, rng);
  for (double M : {1.0, 2.0, 4.0})
    EXPECT_NEAR(frequency_diagnostics(free_propagate(f, 0.3), M, M).high_kinetic,
                frequency_diagnostics(f, M, M).high_kinetic, 1e-12 * gradient_energy(f));
}

TEST(Utfl, Examples) {
  GridSpec g{1, 64};
  auto f0 = smooth_datum(g, 10, 4);
  NlsConfig cfg{g, 1.0, 1e-3, false};
  auto tr = evolve(f0, 0.05, cfg, 10);
  auto M = utfl_probe(tr, 1e-3);
  ASSERT_TRUE(M.has_value());
  EXPECT_LT(*M, g.n / 2);
  std::optional<int> prev;
  for (double eps : {1e-8, 1e-6, 1e-4, 1e-2}) {
    auto m = utfl_probe(tr, eps);
    if (prev && m) EXPECT_LE(*m, *prev);
    if (prev) EXPECT_TRUE(m.has_value());
    prev = m;
  }
  // plane wave: |xi| = 5, so the tail vanishes exactly from M = 8 on, at all times
  auto pw = evolve(plane_wave(g, {5}, 0.5), 0.2, cfg, 20);
  EXPECT_EQ(utfl_probe(pw, 1e-6).value(), 8);
  auto first = pw;
  first.states.resize(1);
  first.times.resize(1);
  EXPECT_EQ(utfl_probe(first, 1e-6), utfl_probe(pw, 1e-6));
}

TEST(EnergyLowDrift, FreeFlowAndStationary) {
  GridSpec g{1, 64};
  auto f0 = smooth_datum(g, 11, 20, 2.0);
  auto tr = evolve(f0, 0.1, {g, 0.0, 1e-3, false}, 5);
  for (double M : {4.0, 8.0}) EXPECT_LT(energy_low_drift(tr, M).max_rate, 1e-8);
  auto pw = evolve(plane_wave(g, {6}, 0.9), 0.1, {g, 1.0, 1e-3, false}, 5);
  EXPECT_LT(energy_low_drift(pw, 4).max_rate, 1e-6);
}

TEST(EnergyLowDrift, ConservationTransfer) {
  GridSpec g{1, 64};
  auto f0 = smooth_datum(g, 12, 20, 4.0);
  auto tr = evolve(f0, 0.1, {g, 1.0, 1e-3, false}, 10);
  const auto s0 = energy_split(tr.states.front(), 8, 1.0);
  const double e0 = energy_nls(tr.states.front(), 1.0);
  for (const auto& u : tr.states) {
    const auto s = energy_split(u, 8, 1.0);
    const double drift = energy_nls(u, 1.0) - e0;
    EXPECT_NEAR((s.high - s0.high) + (s.low - s0.low), drift, 1e-10 * e0);
  }
}
