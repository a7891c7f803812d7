#pragma once

// Thin RAII layer over FFTW (double precision, complex-to-complex).

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

namespace cvqkd {

namespace detail {

// FFTW planning is not thread-safe; execution with new-array execute is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline void run_fft(std::vector<std::complex<double>>& x, int sign) {
  if (x.empty()) return;
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(x.size()), data, data, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace detail

/// In-place forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N).
inline void fft_inplace(std::vector<std::complex<double>>& x) { detail::run_fft(x, FFTW_FORWARD); }

/// In-place inverse DFT including the 1/N factor.
inline void ifft_inplace(std::vector<std::complex<double>>& x) {
  detail::run_fft(x, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= scale;
}

inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> x) {
  fft_inplace(x);
  return x;
}

inline std::vector<std::complex<double>> ifft(std::vector<std::complex<double>> x) {
  ifft_inplace(x);
  return x;
}

/// Frequency (Hz) of DFT bin k for an N-point transform, in (-fs/2, fs/2].
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return (k <= n / 2 ? kk : kk - nn) * sample_rate / nn;
}

}  // namespace cvqkd
