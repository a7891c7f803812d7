#pragma once

// Filtering primitives: root-raised-cosine pulses, rational resampling, FIR
// convolution and the analytic frequency responses used as hardware stand-ins.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/fft.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

/// Continuous RRC pulse, t in symbol periods, normalised to unit energy per symbol
/// (integral of p^2 over t equals 1). p * p is the raised cosine with peak 1.
inline double rrc_pulse(double t, double rolloff) {
  const double b = rolloff;
  const double pi = std::numbers::pi;
  if (std::abs(t) < 1e-12) return 1.0 - b + 4.0 * b / pi;
  if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-12) {
    return b / std::sqrt(2.0) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * b)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * b)));
  }
  const double num = std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b));
  const double den = pi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
  return num / den;
}

namespace detail {

inline void check_rrc_args(double rolloff, int span, double sps) {
  require(rolloff > 0.0 && rolloff <= 1.0, "RRC roll-off must lie in (0, 1]");
  require(span >= 8 && span % 2 == 0, "RRC span must be an even number of symbols >= 8");
  require(sps >= 2.0 && std::isfinite(sps), "RRC needs at least 2 samples per symbol");
}

}  // namespace detail

/// Odd-length, symmetric, unit-energy RRC taps. `sps` may be fractional; tap n
/// sits at (n - centre) / sps symbol periods.
inline RVector rrc_taps(double rolloff, int span, double sps) {
  detail::check_rrc_args(rolloff, span, sps);
  const auto half = static_cast<std::ptrdiff_t>(std::floor(span * sps / 2.0));
  RVector h(static_cast<std::size_t>(2 * half + 1));
  double e = 0.0;
  for (std::ptrdiff_t n = -half; n <= half; ++n) {
    const double v = rrc_pulse(static_cast<double>(n) / sps, rolloff);
    h[static_cast<std::size_t>(n + half)] = v;
    e += v * v;
  }
  const double s = 1.0 / std::sqrt(e);
  for (auto& v : h) v *= s;
  return h;
}

/// RRC taps on a grid shifted by `frac` samples (tap n at (n - centre + frac) / sps),
/// scaled by the same factor as the unshifted set. One branch of a polyphase bank.
inline RVector rrc_polyphase_taps(double rolloff, int span, double sps, double frac) {
  detail::check_rrc_args(rolloff, span, sps);
  const auto half = static_cast<std::ptrdiff_t>(std::floor(span * sps / 2.0));
  double e = 0.0;
  for (std::ptrdiff_t n = -half; n <= half; ++n) {
    const double v = rrc_pulse(static_cast<double>(n) / sps, rolloff);
    e += v * v;
  }
  const double s = 1.0 / std::sqrt(e);
  RVector h(static_cast<std::size_t>(2 * half + 1));
  for (std::ptrdiff_t n = -half; n <= half; ++n)
    h[static_cast<std::size_t>(n + half)] = s * rrc_pulse((static_cast<double>(n) + frac) / sps, rolloff);
  return h;
}

/// p/q in lowest terms.
struct Ratio {
  std::int64_t p = 1;
  std::int64_t q = 1;
  double value() const { return static_cast<double>(p) / static_cast<double>(q); }
};

/// Best rational approximation of `x` with denominator <= max_den (continued
/// fractions); throws when the ratio is not within `rel_tol` of such a fraction.
inline Ratio rational_ratio(double x, std::int64_t max_den = 1000, double rel_tol = 1e-9) {
  detail::require(x > 0.0 && std::isfinite(x), "resampling ratio must be positive and finite");
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const auto a = static_cast<std::int64_t>(std::floor(r));
    const std::int64_t h2 = a * h1 + h0, k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) <= rel_tol * x) {
      detail::require(h1 <= 100000, "resampling ratio numerator too large");
      return {h1, k1};
    }
    const double frac = r - static_cast<double>(a);
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  throw InvalidArgument("resampling ratio " + std::to_string(x) + " is not a small rational p/q");
}

/// Modified Bessel function I0 (series), for the Kaiser window.
inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double y = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= y / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

/// Polyphase rational resampler (Kaiser-windowed sinc). Output sample n is the
/// band-limited interpolant of the input at time n / out_rate, so both signals
/// share t = 0 at index 0.
class RationalResampler {
public:
  RationalResampler(double in_rate, double out_rate, int half_width = 32, double cutoff_fraction = 0.85,
                    double kaiser_beta = 8.0)
      : ratio_(rational_ratio(out_rate / in_rate)), half_width_(half_width) {
    detail::require(half_width >= 4, "resampler half width too small");
    const double fc = 0.5 * cutoff_fraction * std::min(1.0, ratio_.value());  // cycles per input sample
    const auto up = static_cast<std::size_t>(ratio_.p);
    bank_.assign(up, RVector(static_cast<std::size_t>(2 * half_width)));
    const double i0b = bessel_i0(kaiser_beta);
    for (std::size_t ph = 0; ph < up; ++ph) {
      const double frac = static_cast<double>(ph) / static_cast<double>(up);
      double dc = 0.0;
      for (int j = 0; j < 2 * half_width; ++j) {
        // tap j multiplies input sample floor(u) - half_width + 1 + j
        const double tau = frac + static_cast<double>(half_width - 1 - j);
        const double x = tau / static_cast<double>(half_width);
        const double w = std::abs(x) < 1.0 ? bessel_i0(kaiser_beta * std::sqrt(1.0 - x * x)) / i0b : 0.0;
        const double arg = 2.0 * fc * tau;
        const double sinc = std::abs(arg) < 1e-15 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
        bank_[ph][static_cast<std::size_t>(j)] = 2.0 * fc * sinc * w;
        dc += bank_[ph][static_cast<std::size_t>(j)];
      }
      for (auto& v : bank_[ph]) v /= dc;  // unit DC gain per phase
    }
  }

  Ratio ratio() const { return ratio_; }

  std::size_t output_length(std::size_t n_in) const {
    return static_cast<std::size_t>((static_cast<std::int64_t>(n_in) - 1) * ratio_.p / ratio_.q) + 1;
  }

  CVector process(const CVector& x) const {
    const std::size_t n_out = output_length(x.size());
    CVector y(n_out);
    const auto n_in = static_cast<std::int64_t>(x.size());
    for (std::size_t n = 0; n < n_out; ++n) {
      const std::int64_t num = static_cast<std::int64_t>(n) * ratio_.q;
      const std::int64_t base = num / ratio_.p;
      const auto& taps = bank_[static_cast<std::size_t>(num % ratio_.p)];
      const std::int64_t first = base - half_width_ + 1;
      cplx acc{};
      if (first >= 0 && first + 2 * half_width_ <= n_in) {
        const cplx* px = x.data() + first;
        for (int j = 0; j < 2 * half_width_; ++j) acc += px[j] * taps[static_cast<std::size_t>(j)];
      } else {
        for (int j = 0; j < 2 * half_width_; ++j) {
          const std::int64_t k = first + j;
          if (k >= 0 && k < n_in) acc += x[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(j)];
        }
      }
      y[n] = acc;
    }
    return y;
  }

private:
  Ratio ratio_;
  int half_width_;
  std::vector<RVector> bank_;
};

/// Causal FIR, y[n] = sum_j h[j] x[n - j], same length as x (overlap-save).
inline CVector fir_filter(const CVector& x, const CVector& h) {
  detail::require(!h.empty(), "fir_filter: empty tap vector");
  if (x.empty()) return {};
  const std::size_t m = h.size();
  if (m * x.size() <= (1u << 20)) {
    CVector y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
      cplx acc{};
      const std::size_t jmax = std::min(m, n + 1);
      for (std::size_t j = 0; j < jmax; ++j) acc += h[j] * x[n - j];
      y[n] = acc;
    }
    return y;
  }
  std::size_t nfft = 1;
  while (nfft < 8 * m) nfft <<= 1;
  nfft = std::max<std::size_t>(nfft, 1 << 14);
  const std::size_t step = nfft - (m - 1);
  CVector hf(nfft);
  std::copy(h.begin(), h.end(), hf.begin());
  fft_inplace(hf);
  CVector y(x.size());
  CVector buf(nfft);
  for (std::size_t start = 0; start < x.size(); start += step) {
    // buf holds x[start - (m-1) .. start - (m-1) + nfft)
    for (std::size_t i = 0; i < nfft; ++i) {
      const auto k = static_cast<std::ptrdiff_t>(start + i) - static_cast<std::ptrdiff_t>(m - 1);
      buf[i] = (k >= 0 && static_cast<std::size_t>(k) < x.size()) ? x[static_cast<std::size_t>(k)] : cplx{};
    }
    fft_inplace(buf);
    for (std::size_t i = 0; i < nfft; ++i) buf[i] *= hf[i];
    ifft_inplace(buf);
    const std::size_t count = std::min(step, x.size() - start);
    for (std::size_t i = 0; i < count; ++i) y[start + i] = buf[m - 1 + i];
  }
  return y;
}

inline CVector fir_filter(const CVector& x, const RVector& h) {
  return fir_filter(x, CVector(h.begin(), h.end()));
}

/// Parametric magnitude/phase responses standing in for measured hardware.
struct FrequencyResponse {
  enum class Kind { flat, gaussian, butterworth2 };
  Kind kind = Kind::flat;
  double f3db = 0.0;  // Hz

  static FrequencyResponse flat() { return {}; }
  static FrequencyResponse gaussian(double f3) { return {Kind::gaussian, f3}; }
  static FrequencyResponse butterworth2(double f3) { return {Kind::butterworth2, f3}; }

  cplx operator()(double f) const {
    switch (kind) {
      case Kind::flat: return 1.0;
      case Kind::gaussian:
        // |H(f3)|^2 = 1/2, zero phase
        return std::exp(-0.5 * std::log(2.0) * (f / f3db) * (f / f3db));
      case Kind::butterworth2: {
        const cplx s{0.0, f / f3db};
        return 1.0 / (s * s + std::sqrt(2.0) * s + 1.0);
      }
    }
    return 1.0;
  }
};

inline std::string_view to_string(FrequencyResponse::Kind k) {
  switch (k) {
    case FrequencyResponse::Kind::flat: return "flat";
    case FrequencyResponse::Kind::gaussian: return "gaussian";
    case FrequencyResponse::Kind::butterworth2: return "butterworth2";
  }
  return "?";
}

/// Multiply the spectrum of x by `gain(f)` (circular, whole-record FFT).
template <typename Gain>
CVector apply_spectral_gain(const CVector& x, double sample_rate, Gain&& gain) {
  CVector X = fft(x);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= gain(bin_frequency(k, X.size(), sample_rate));
  ifft_inplace(X);
  return X;
}

/// First-order (one-pole) low-pass whose digital response is exactly -3 dB at f3.
/// Minimum phase; applied independently to the real and imaginary parts.
class OnePoleLowpass {
public:
  OnePoleLowpass(double f3db, double sample_rate) {
    detail::require(f3db > 0.0 && f3db < sample_rate / 2.0, "one-pole cutoff must lie in (0, fs/2)");
    const double c = std::cos(2.0 * std::numbers::pi * f3db / sample_rate);
    const double b = 4.0 - 2.0 * c;
    pole_ = 0.5 * (b - std::sqrt(b * b - 4.0));
  }

  double pole() const { return pole_; }

  cplx response(double f, double sample_rate) const {
    const cplx z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / sample_rate);
    return (1.0 - pole_) / (1.0 - pole_ * z1);
  }

  void process_inplace(CVector& x) const {
    cplx state{};
    for (auto& v : x) {
      state = (1.0 - pole_) * v + pole_ * state;
      v = state;
    }
  }

private:
  double pole_ = 0.0;
};

/// 4-point cubic (Catmull-Rom) interpolation of y at integer index i + frac, frac in [0, 1).
inline cplx cubic_interpolate(cplx ym1, cplx y0, cplx y1, cplx y2, double frac) {
  const double t = frac, t2 = t * t, t3 = t2 * t;
  return 0.5 * ((2.0 * y0) + (-ym1 + y1) * t + (2.0 * ym1 - 5.0 * y0 + 4.0 * y1 - y2) * t2 +
                (-ym1 + 3.0 * y0 - 3.0 * y1 + y2) * t3);
}

}  // namespace cvqkd
