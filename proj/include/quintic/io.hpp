#pragma once

// Binary dumps. Little-endian header {d: u32, n: u32, [slots: u32],
// layout: 8 ASCII bytes "spectral" | "physical"}, then complex64 pairs.
// Spectral payloads are row-major over xi_j = -n/2+1 .. n/2.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "quintic/field.hpp"

namespace quintic::io {

enum class Layout { Physical, Spectral };

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw Error(ErrorKind::Io, "truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& os, double v) { put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

inline double get_f32(std::istream& is) { return std::bit_cast<float>(get_u32(is)); }

// Index permutation between FFT order and the centered dump order
// (xi = -n/2+1 .. n/2 maps to dump index xi + n/2 - 1).
inline std::vector<std::size_t> centered_order(int rank, int n) {
  std::vector<std::size_t> perm(ipow(static_cast<std::size_t>(n), rank));
  for_each_frequency(rank, n, [&](std::size_t lin, const int* xi) {
    std::size_t t = 0;
    for (int a = 0; a < rank; ++a) {
      const int f = xi[a] == -n / 2 ? n / 2 : xi[a];
      t = t * static_cast<std::size_t>(n) + static_cast<std::size_t>(f + n / 2 - 1);
    }
    perm[lin] = t;
  });
  return perm;
}

inline void write_payload(std::ostream& os, const std::vector<Complex>& values, int rank, int n, Layout layout) {
  os.write(layout == Layout::Spectral ? "spectral" : "physical", 8);
  std::vector<Complex> out = values;
  if (layout == Layout::Spectral) {
    auto c = values;
    fft::to_spectral(c, rank, n);
    const auto perm = centered_order(rank, n);
    for (std::size_t i = 0; i < c.size(); ++i) out[perm[i]] = c[i];
  }
  for (const auto& v : out) {
    put_f32(os, v.real());
    put_f32(os, v.imag());
  }
}

inline std::vector<Complex> read_payload(std::istream& is, int rank, int n) {
  char tag[8];
  is.read(tag, 8);
  if (!is) throw Error(ErrorKind::Io, "truncated layout tag");
  const std::string layout(tag, 8);
  if (layout != "spectral" && layout != "physical") throw Error(ErrorKind::Io, "unknown layout tag");
  std::vector<Complex> in(ipow(static_cast<std::size_t>(n), rank));
  for (auto& v : in) {
    const double re = get_f32(is);
    const double im = get_f32(is);
    v = {re, im};
  }
  if (layout == "physical") return in;
  const auto perm = centered_order(rank, n);
  std::vector<Complex> c(in.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = in[perm[i]];
  fft::to_physical(c, rank, n);
  return c;
}

}  // namespace detail

inline void write_field(const std::string& path, const TorusField& f, Layout layout = Layout::Spectral) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  detail::put_u32(os, static_cast<std::uint32_t>(f.grid().d));
  detail::put_u32(os, static_cast<std::uint32_t>(f.grid().n));
  detail::write_payload(os, f.values(), f.grid().d, f.grid().n, layout);
}

inline TorusField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  GridSpec g{static_cast<int>(detail::get_u32(is)), static_cast<int>(detail::get_u32(is))};
  validate(g);
  return TorusField(g, detail::read_payload(is, g.d, g.n));
}

// N-slot tensor dump: same format with a slot count after n.
inline void write_tensor(const std::string& path, const GridSpec& g, int slots, const std::vector<Complex>& amps,
                         Layout layout = Layout::Physical) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path);
  detail::put_u32(os, static_cast<std::uint32_t>(g.d));
  detail::put_u32(os, static_cast<std::uint32_t>(g.n));
  detail::put_u32(os, static_cast<std::uint32_t>(slots));
  detail::write_payload(os, amps, g.d * slots, g.n, layout);
}

struct TensorDump {
  GridSpec grid;
  int slots = 0;
  std::vector<Complex> amplitudes;
};

inline TensorDump read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  TensorDump t;
  t.grid.d = static_cast<int>(detail::get_u32(is));
  t.grid.n = static_cast<int>(detail::get_u32(is));
  validate(t.grid);
  t.slots = static_cast<int>(detail::get_u32(is));
  if (t.slots < 1 || t.slots > 8) throw Error(ErrorKind::Io, "implausible slot count");
  t.amplitudes = detail::read_payload(is, t.grid.d * t.slots, t.grid.n);
  return t;
}

}  // namespace quintic::io
