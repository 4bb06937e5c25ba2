#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "quintic/error.hpp"

namespace quintic {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Uniform periodic grid on [0, 2pi)^d with n points per axis.
struct GridSpec {
  int d = 1;
  int n = 8;

  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
    return s;
  }
  double spacing() const { return kTwoPi / n; }
  // Quadrature weight of one grid cell, (2pi/n)^d.
  double cell_volume() const { return std::pow(spacing(), d); }
  double volume() const { return std::pow(kTwoPi, d); }
  int nyquist() const { return n / 2; }

  bool operator==(const GridSpec&) const = default;
};

inline void validate(const GridSpec& g) {
  if (g.d < 1 || g.d > 3) throw Error(ErrorKind::InvalidArgument, "grid dimension must be 1, 2 or 3");
  if (g.n < 4 || g.n % 2 != 0)
    throw Error(ErrorKind::InvalidArgument, "points per axis must be even and at least 4");
}

// Signed frequency of FFT-order index m on an axis of n points.
inline int frequency(int m, int n) { return m <= n / 2 ? m : m - n; }

// FFT-order index of a signed frequency (taken mod n).
inline int frequency_index(int xi, int n) { return ((xi % n) + n) % n; }

inline std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Odometer over a rank-r cube of side n, row-major with axis 0 slowest.
// Calls fn(linear_index, const int* idx) where idx holds per-axis indices.
template <class Fn>
void for_each_index(int rank, int n, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(rank), 0);
  const std::size_t total = ipow(static_cast<std::size_t>(n), rank);
  for (std::size_t lin = 0; lin < total; ++lin) {
    fn(lin, static_cast<const int*>(idx.data()));
    for (int a = rank - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
}

// Same odometer, but hands out signed frequencies instead of indices.
template <class Fn>
void for_each_frequency(int rank, int n, Fn&& fn) {
  std::vector<int> xi(static_cast<std::size_t>(rank), 0);
  for_each_index(rank, n, [&](std::size_t lin, const int* idx) {
    for (int a = 0; a < rank; ++a) xi[static_cast<std::size_t>(a)] = frequency(idx[a], n);
    fn(lin, static_cast<const int*>(xi.data()));
  });
}

// Tabulates fn(xi) over a rank-r frequency cube in FFT order.
template <class Fn>
std::vector<double> tabulate_symbol(int rank, int n, Fn&& fn) {
  std::vector<double> out(ipow(static_cast<std::size_t>(n), rank));
  for_each_frequency(rank, n, [&](std::size_t lin, const int* xi) { out[lin] = fn(xi); });
  return out;
}

inline double squared_norm(const int* xi, int d) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += static_cast<double>(xi[a]) * xi[a];
  return s;
}

inline int sup_norm(const int* xi, int d) {
  int s = 0;
  for (int a = 0; a < d; ++a) s = std::max(s, std::abs(xi[a]));
  return s;
}

}  // namespace quintic
