#pragma once

// Thin FFTW wrapper. Plans are created once per (rank, n, direction) and
// shared; FFTW_UNALIGNED lets one plan run on any buffer through the
// new-array execute interface, which is thread safe. Planning itself is not,
// hence the mutex.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "quintic/grid.hpp"

namespace quintic::fft {

using Complex = std::complex<double>;

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int rank, int n, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_tuple(rank, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(rank), n);
    const std::size_t total = ipow(static_cast<std::size_t>(n), rank);
    auto* scratch = fftw_alloc_complex(total);
    fftw_plan plan = fftw_plan_dft(rank, dims.data(), scratch, scratch, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw Error(ErrorKind::InvalidArgument, "fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

inline void execute(Complex* data, int rank, int n, int sign) {
  fftw_plan plan = PlanCache::instance().get(rank, n, sign);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, p, p);
}

}  // namespace detail

// Unnormalized forward transform, sum_m f_m e^{-i xi x_m}, in place.
inline void forward(Complex* data, int rank, int n) { detail::execute(data, rank, n, FFTW_FORWARD); }

// Unnormalized backward transform, sum_xi c_xi e^{+i xi x_m}, in place.
inline void backward(Complex* data, int rank, int n) { detail::execute(data, rank, n, FFTW_BACKWARD); }

// Physical samples -> Fourier coefficients with f(x) = sum c_xi e^{i xi x}.
inline void to_spectral(std::vector<Complex>& data, int rank, int n) {
  forward(data.data(), rank, n);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

inline void to_physical(std::vector<Complex>& data, int rank, int n) { backward(data.data(), rank, n); }

// Applies a real Fourier multiplier (FFT order) to physical samples.
inline void apply_symbol(std::vector<Complex>& data, int rank, int n, const std::vector<double>& symbol) {
  forward(data.data(), rank, n);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= symbol[i] * scale;
  backward(data.data(), rank, n);
}

inline void apply_symbol(std::vector<Complex>& data, int rank, int n, const std::vector<Complex>& symbol) {
  forward(data.data(), rank, n);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= symbol[i] * scale;
  backward(data.data(), rank, n);
}

}  // namespace quintic::fft
