#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "quintic/io.hpp"
#include "quintic/spectral.hpp"

using namespace quintic;

namespace {

// Naive O(G^2) DFT, independent of FFTW.
std::vector<Complex> naive_coefficients(const TorusField& f) {
  const auto& g = f.grid();
  std::vector<std::vector<int>> idx(g.size());
  for_each_index(g.d, g.n, [&](std::size_t lin, const int* i) { idx[lin].assign(i, i + g.d); });
  std::vector<Complex> c(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    Complex s = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
      double phase = 0.0;
      for (int a = 0; a < g.d; ++a) phase -= frequency(idx[k][a], g.n) * coordinate(idx[m][a], g.n);
      s += f[m] * std::polar(1.0, phase);
    }
    c[k] = s / static_cast<double>(g.size());
  }
  return c;
}

double max_diff(const TorusField& a, const TorusField& b) { return max_abs_difference(a, b); }

TorusField random_field(const GridSpec& g, Rng& rng) { return random_band_limited(g, g.n / 2, rng); }

}  // namespace

TEST(Fft, MatchesNaiveDft) {
  Rng rng(1);
  for (GridSpec g : {GridSpec{1, 8}, GridSpec{2, 6}, GridSpec{3, 4}}) {
    TorusField f(g);
    for (auto& v : f.values()) v = rng.complex_normal();
    const auto fast = f.coefficients();
    const auto slow = naive_coefficients(f);
    for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(std::abs(fast[i] - slow[i]), 0.0, 1e-13);
  }
}

TEST(Fft, RoundTripAndParseval) {
  Rng rng(2);
  for (GridSpec g : {GridSpec{1, 16}, GridSpec{3, 8}}) {
    TorusField f(g);
    for (auto& v : f.values()) v = rng.complex_normal();
    const auto back = TorusField::from_coefficients(g, f.coefficients());
    EXPECT_LT(max_diff(back, f) / sup_norm(f), 1e-12);
    const double lhs = std::pow(l2_norm(f), 2);
    double rhs = 0.0;
    for (const auto& c : f.coefficients()) rhs += std::norm(c);
    rhs *= g.volume();
    EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
  }
}

TEST(Grid, Validation) {
  EXPECT_THROW(validate(GridSpec{4, 8}), Error);
  EXPECT_THROW(validate(GridSpec{1, 7}), Error);
  EXPECT_THROW(validate(GridSpec{1, 2}), Error);
  EXPECT_NO_THROW(validate(GridSpec{3, 4}));
}

TEST(Projectors, Examples) {
  GridSpec g{1, 16};
  auto f = plane_wave(g, {3});
  EXPECT_LT(sup_norm(project_leq(f, 2)), 1e-14);
  auto one = constant_field(g, 1.0);
  EXPECT_LT(max_diff(project_leq(one, 1), one), 1e-14);
  EXPECT_LT(max_diff(dyadic_project(f, 4), f), 1e-14);
  EXPECT_LT(sup_norm(dyadic_project(f, 2)), 1e-14);
  EXPECT_THROW(dyadic_project(f, 1), Error);
}

TEST(Projectors, AlgebraOnRandomFields) {
  Rng rng(3);
  for (GridSpec g : {GridSpec{1, 16}, GridSpec{2, 16}, GridSpec{3, 8}}) {
    for (int trial = 0; trial < 10; ++trial) {
      auto f = random_field(g, rng);
      auto h = random_field(g, rng);
      for (double M : {1.0, 2.0, 4.0}) {
        const auto lo = project_leq(f, M);
        EXPECT_LT(max_diff(project_leq(lo, M), lo), 1e-13);
        EXPECT_LT(max_diff(lo + project_gt(f, M), f), 1e-13);
        EXPECT_LT(std::abs(inner(lo, project_gt(h, M))), 1e-12 * l2_norm(f) * l2_norm(h));
      }
      TorusField sum = project_leq(f, 1);
      for (int M = 2; M <= g.n / 2; M *= 2) sum += dyadic_project(f, M);
      EXPECT_LT(max_diff(sum, f), 1e-13);
    }
  }
}

TEST(Projectors, CubeGalileanIdentity) {
  Rng rng(4);
  GridSpec g{2, 16};
  auto f = random_band_limited(g, 5, rng);
  EXPECT_LT(max_diff(cube_project(f, {{0, 0}, 3}), project_leq(f, 3)), 1e-14);
  GridSpec g1{1, 16};
  auto w = plane_wave(g1, {5});
  EXPECT_LT(max_diff(cube_project(w, {{5}, 1}), w), 1e-13);
  const std::vector<int> xi0{2, -1};
  const std::vector<int> minus{-2, 1};
  auto lhs = cube_project(f, {xi0, 2});
  auto rhs = modulate(project_leq(modulate(f, minus), 2), xi0);
  EXPECT_LT(max_diff(lhs, rhs), 1e-12);
}

TEST(Dirichlet, Examples) {
  for (int d = 1; d <= 3; ++d) {
    GridSpec g{d, 8};
    for (int M : {1, 2, 3}) EXPECT_NEAR(dirichlet_kernel(g, M)[0].real(), std::pow(2 * M + 1, d), 1e-12);
  }
  EXPECT_NEAR(std::abs(dirichlet_1d(std::numbers::pi, 1) - Complex(-1.0, 0.0)), 0.0, 1e-14);
}

TEST(Dirichlet, DirectSumMatchesHalfAngleClosedForm) {
  const int n = 32;
  bool alt_matches_everywhere = true;
  for (int M = 1; M <= n / 2; ++M) {
    for (int m = 0; m < n; ++m) {
      const double x = coordinate(m, n);
      const Complex direct = dirichlet_1d(x, M);
      EXPECT_NEAR(direct.imag(), 0.0, 1e-10);
      EXPECT_NEAR(direct.real(), dirichlet_closed_form(x, M), 1e-10);
      if (std::abs(direct.real() - dirichlet_alt_form(x, M)) > 1e-8) alt_matches_everywhere = false;
    }
  }
  // sin((M+1)x)/sin(x) is not the geometric sum; e.g. M=1, x=pi/2 gives 0 vs 1.
  EXPECT_FALSE(alt_matches_everywhere);
  EXPECT_NEAR(dirichlet_alt_form(std::numbers::pi / 2, 1), 0.0, 1e-14);
  EXPECT_NEAR(dirichlet_closed_form(std::numbers::pi / 2, 1), 1.0, 1e-14);
}

TEST(Dirichlet, ConvolutionReproducesProjector) {
  Rng rng(5);
  for (GridSpec g : {GridSpec{1, 16}, GridSpec{2, 8}, GridSpec{3, 8}}) {
    auto f = random_field(g, rng);
    for (int M = 1; M < g.n / 2; M *= 2) {
      auto K = dirichlet_kernel(g, M);
      EXPECT_LT(max_diff(convolve_direct(K, f), project_leq(f, M)), 1e-10);
    }
  }
}

TEST(Sobolev, Examples) {
  for (int d = 1; d <= 3; ++d) {
    GridSpec g{d, 8};
    auto one = constant_field(g, 1.0);
    for (double s : {-1.0, 0.0, 1.5}) EXPECT_NEAR(sobolev_norm(one, s), std::pow(kTwoPi, 0.5 * d), 1e-12);
    std::vector<int> xi(static_cast<std::size_t>(d), 0);
    xi[0] = 2;
    if (d > 1) xi[1] = -1;
    const double xi2 = d > 1 ? 5.0 : 4.0;
    auto w = plane_wave(g, xi);
    for (double s : {-1.0, 1.0, 2.0})
      EXPECT_NEAR(sobolev_norm(w, s) / (std::pow(1 + xi2, 0.5 * s) * std::pow(kTwoPi, 0.5 * d)), 1.0, 1e-12);
  }
  Rng rng(6);
  GridSpec g{3, 8};
  auto f = random_field(g, rng);
  EXPECT_NEAR(sobolev_norm(f, 0.0) / l2_norm(f), 1.0, 1e-12);
  EXPECT_LT(max_diff(apply_S(apply_S(f, 1.3), -1.3), f) / sup_norm(f), 1e-12);
  auto r = apply_R(constant_field(g, 2.0), 1.0);
  EXPECT_LT(sup_norm(r), 1e-14);
}

TEST(Bernstein, Examples) {
  for (int d = 1; d <= 3; ++d) {
    GridSpec g{d, 16};
    auto one = constant_field(g, 1.0);
    for (double M : {2.0, 4.0}) {
      const double expect = std::pow(kTwoPi, -0.5 * d) * std::pow(M, -0.5 * d);
      EXPECT_NEAR(bernstein_ratio(one, M, 2.0, INFINITY) / expect, 1.0, 1e-12);
    }
    auto K = dirichlet_kernel(g, 2);
    EXPECT_NEAR(sup_norm(K), std::pow(5.0, d), 1e-10);
    EXPECT_LE(bernstein_ratio(K, 2, 1.0, INFINITY), std::pow(3.0, d));
  }
  EXPECT_EQ(bernstein_ratio(TorusField(GridSpec{1, 8}), 2, 2, 4), 0.0);
}

TEST(Bernstein, EmpiricalConstantStableAcrossM) {
  Rng rng(7);
  GridSpec g{2, 32};
  std::vector<double> best;
  for (double M : {2.0, 4.0, 8.0}) {
    double mx = 0.0;
    Rng local(rng.next_seed());
    for (int s = 0; s < 100; ++s) {
      auto f = random_coherent_band_limited(g, static_cast<int>(M), local);
      mx = std::max(mx, bernstein_ratio(f, M, 2.0, INFINITY));
    }
    best.push_back(mx);
  }
  const auto [lo, hi] = std::minmax_element(best.begin(), best.end());
  EXPECT_LT(*hi / *lo, 2.0);
}

TEST(Io, FieldRoundTripBothLayouts) {
  Rng rng(8);
  GridSpec g{2, 8};
  auto f = random_field(g, rng);
  const std::string path = ::testing::TempDir() + "field.bin";
  for (auto layout : {io::Layout::Physical, io::Layout::Spectral}) {
    io::write_field(path, f, layout);
    auto back = io::read_field(path);
    EXPECT_EQ(back.grid(), g);
    EXPECT_LT(max_diff(back, f) / sup_norm(f), 1e-6);  // complex64 payload
  }
  io::write_field(path, plane_wave(GridSpec{1, 8}, {4}), io::Layout::Spectral);
  EXPECT_LT(max_diff(io::read_field(path), plane_wave(GridSpec{1, 8}, {4})), 1e-6);
}
