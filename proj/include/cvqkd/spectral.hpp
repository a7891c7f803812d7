#pragma once

// Spectral estimation helpers shared by the whitening fit and the tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/fft.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

/// Two-sided power spectral density in natural DFT bin order.
struct Psd {
  RVector density;    // power per Hz
  double sample_rate = 0.0;

  std::size_t size() const { return density.size(); }
  double frequency(std::size_t k) const { return bin_frequency(k, density.size(), sample_rate); }
};

/// Welch estimate with a Hann window and 50% overlap.
inline Psd welch_psd(const CVector& x, std::size_t nfft, double sample_rate) {
  detail::require(nfft >= 8, "welch_psd: nfft too small");
  detail::require(x.size() >= nfft, "welch_psd: signal shorter than one segment");
  RVector win(nfft);
  double win_pow = 0.0;
  for (std::size_t i = 0; i < nfft; ++i) {
    win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nfft));
    win_pow += win[i] * win[i];
  }
  const std::size_t hop = nfft / 2;
  Psd out{RVector(nfft, 0.0), sample_rate};
  std::size_t segments = 0;
  CVector buf(nfft);
  for (std::size_t start = 0; start + nfft <= x.size(); start += hop) {
    for (std::size_t i = 0; i < nfft; ++i) buf[i] = x[start + i] * win[i];
    fft_inplace(buf);
    for (std::size_t k = 0; k < nfft; ++k) out.density[k] += std::norm(buf[k]);
    ++segments;
  }
  const double scale = 1.0 / (static_cast<double>(segments) * win_pow * sample_rate);
  for (auto& v : out.density) v *= scale;
  return out;
}

/// Raw periodogram (rectangular window) of the whole signal.
inline Psd periodogram(const CVector& x, double sample_rate) {
  CVector buf = fft(x);
  Psd out{RVector(x.size()), sample_rate};
  const double scale = 1.0 / (static_cast<double>(x.size()) * sample_rate);
  for (std::size_t k = 0; k < x.size(); ++k) out.density[k] = std::norm(buf[k]) * scale;
  return out;
}

/// Peak-to-trough spread (dB) of the PSD over |f| in [f_lo, f_hi].
inline double flatness_db(const Psd& psd, double f_lo, double f_hi) {
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = std::abs(psd.frequency(k));
    if (f < f_lo || f > f_hi) continue;
    lo = std::min(lo, psd.density[k]);
    hi = std::max(hi, psd.density[k]);
  }
  detail::require(hi > 0.0 && std::isfinite(lo), "flatness_db: empty band");
  return 10.0 * std::log10(hi / lo);
}

/// Frequencies at which the PSD is within `drop_db` of its maximum; returns (min f, max f).
inline std::pair<double, double> occupied_band(const Psd& psd, double drop_db) {
  const double peak = *std::max_element(psd.density.begin(), psd.density.end());
  const double thresh = peak * std::pow(10.0, -drop_db / 10.0);
  double fmin = INFINITY, fmax = -INFINITY;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    if (psd.density[k] < thresh) continue;
    fmin = std::min(fmin, psd.frequency(k));
    fmax = std::max(fmax, psd.frequency(k));
  }
  return {fmin, fmax};
}

}  // namespace cvqkd
