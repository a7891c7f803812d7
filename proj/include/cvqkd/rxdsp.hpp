#pragma once

// Receiver DSP: whitening, pilot tracking, carrier correction, data-aided
// synchronisation, matched filtering and residual rotation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>

#include "cvqkd/channel.hpp"
#include "cvqkd/constellation.hpp"
#include "cvqkd/dsp.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/fft.hpp"
#include "cvqkd/recovered.hpp"
#include "cvqkd/spectral.hpp"
#include "cvqkd/txdsp.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

struct RxConfig {
  double symbol_rate = 10e9;
  double adc_rate = 80e9;
  double rrc_rolloff = 0.2;
  int rrc_span = 32;
  double pilot_freq_nominal = 8e9;   // where the pilot is searched for
  double tx_pilot_freq = 8e9;        // frequency the transmitter put it at
  double pilot_search_band = 1e9;    // full width of the brick-wall extraction
  double pilot_track_band = 20e6;    // full width of the phase-tracking filter
  int whitening_taps = 64;
  std::size_t welch_nfft = 256;
  std::size_t sync_search_window = 1 << 16;  // candidate offsets, samples
  std::size_t sync_ref_symbols = 4096;
  std::size_t timing_ref_symbols = 1 << 17;
  double min_peak_to_sidelobe_db = 3.0;

  double samples_per_symbol() const { return adc_rate / symbol_rate; }

  void validate() const {
    detail::require(symbol_rate > 0.0, "rx symbol rate must be positive");
    detail::require(adc_rate >= symbol_rate * (1.0 + rrc_rolloff), "adc rate below twice the occupied bandwidth");
    detail::check_rrc_args(rrc_rolloff, rrc_span, samples_per_symbol());
    detail::require(whitening_taps >= 16, "whitening filter needs at least 16 taps");
    detail::require(welch_nfft >= 32 && static_cast<std::size_t>(whitening_taps) <= welch_nfft,
                    "welch_nfft must be >= 32 and >= whitening_taps");
    detail::require(pilot_search_band > 0.0 && pilot_track_band > 0.0 && pilot_track_band <= pilot_search_band,
                    "pilot bands must satisfy 0 < track <= search");
    detail::require(std::abs(pilot_freq_nominal) + pilot_search_band / 2.0 < adc_rate / 2.0,
                    "pilot search band beyond Nyquist");
    detail::require(sync_ref_symbols >= 16, "need at least 16 reference symbols for synchronisation");
  }
};

/// Minimum-phase FIR whose magnitude is the inverse square root of the vacuum
/// PSD, normalised to unit gain at DC.
class WhiteningFilter {
public:
  WhiteningFilter() = default;
  explicit WhiteningFilter(CVector taps) : taps_(std::move(taps)) {}

  const CVector& taps() const noexcept { return taps_; }
  bool empty() const noexcept { return taps_.empty(); }

  cplx response(double f, double sample_rate) const {
    cplx acc{};
    for (std::size_t j = 0; j < taps_.size(); ++j)
      acc += taps_[j] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(j) / sample_rate);
    return acc;
  }

  Waveform apply(const Waveform& w) const {
    detail::require(!taps_.empty(), "whitening filter has no taps");
    return {fir_filter(w.samples, taps_), w.sample_rate, w.origin};
  }

private:
  CVector taps_;
};

/// Cepstral minimum-phase fit of 1/sqrt(PSD_vacuum) from a Welch estimate.
inline WhiteningFilter whitening_filter(const Waveform& vacuum, const Waveform& electronic, int taps,
                                        std::size_t nfft = 256) {
  detail::require(taps >= 16, "whitening_filter: need at least 16 taps");
  detail::require(nfft >= static_cast<std::size_t>(taps) && nfft >= 32, "whitening_filter: nfft too small");
  const double vv = quadrature_variance(vacuum.samples);
  const double ve = quadrature_variance(electronic.samples);
  if (!(vv > ve)) throw CalibrationError("whitening_filter: vacuum variance does not exceed electronic variance");

  const Psd psd = welch_psd(vacuum.samples, nfft, vacuum.sample_rate);
  // light circular smoothing (5 bins) before the log
  RVector p(nfft);
  for (std::size_t k = 0; k < nfft; ++k) {
    double acc = 0.0;
    for (std::size_t d = 0; d < 5; ++d) acc += psd.density[(k + nfft + d - 2) % nfft];
    p[k] = acc / 5.0;
  }
  const double ref = p[0];
  detail::require(ref > 0.0, "whitening_filter: vacuum PSD vanishes at DC");

  CVector c(nfft);
  for (std::size_t k = 0; k < nfft; ++k) {
    detail::require(p[k] > 0.0, "whitening_filter: vacuum PSD has a zero");
    c[k] = 0.5 * std::log(ref / p[k]);
  }
  ifft_inplace(c);
  // fold the cepstrum onto positive quefrencies
  const std::size_t half = nfft / 2;
  for (std::size_t n = 1; n < half; ++n) c[n] *= 2.0;
  for (std::size_t n = half + 1; n < nfft; ++n) c[n] = 0.0;
  fft_inplace(c);
  for (auto& v : c) v = std::exp(v);
  ifft_inplace(c);

  CVector h(static_cast<std::size_t>(taps));
  const std::size_t taper_start = static_cast<std::size_t>(taps) / 2;
  for (std::size_t j = 0; j < h.size(); ++j) {
    double w = 1.0;
    if (j >= taper_start) {
      const double x = static_cast<double>(j - taper_start + 1) / static_cast<double>(h.size() - taper_start + 1);
      w = 0.5 + 0.5 * std::cos(std::numbers::pi * x);
    }
    h[j] = c[j] * w;
  }
  // unit DC gain after truncation
  cplx dc{};
  for (const auto& v : h) dc += v;
  for (auto& v : h) v /= dc;
  return WhiteningFilter(std::move(h));
}

struct PilotEstimate {
  double freq = 0.0;           // Hz
  double intercept = 0.0;      // rad, phase of the linear fit at sample 0
  RVector phase_profile;       // rad, residual phase after the linear fit
  double peak_to_mean_db = 0.0;
};

namespace detail {

inline RVector unwrap(const CVector& z) {
  RVector ph(z.size());
  double prev = 0.0, offset = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = std::arg(z[i]);
    if (i > 0) {
      const double d = a - prev;
      if (d > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
      else if (d < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    }
    prev = a;
    ph[i] = a + offset;
  }
  return ph;
}

/// Least-squares line a + b n.
inline std::pair<double, double> fit_line(const RVector& y) {
  const auto n = static_cast<double>(y.size());
  const double nm = 0.5 * (n - 1.0);
  double sy = 0.0, sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i) - nm;
    sy += y[i];
    sxy += x * y[i];
    sxx += x * x;
  }
  const double b = sxx > 0.0 ? sxy / sxx : 0.0;
  const double a = sy / n - b * nm;
  return {a, b};
}

/// Centred moving average of length k, edge windows renormalised.
inline CVector moving_average(const CVector& x, std::size_t k) {
  CVector prefix(x.size() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  CVector y(x.size());
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, i + half + 1);
    y[static_cast<std::size_t>(i)] = (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) /
                                     static_cast<double>(hi - lo);
  }
  return y;
}

}  // namespace detail

/// Pilot frequency and phase from the band nominal +/- search_band/2.
///
/// The band is cut out with a brick-wall mask; the analytic pilot is then mixed
/// to DC at the coarse frequency and narrowed with a moving average of width
/// 1 / track_band before unwrapping. Two passes refine the mixing frequency.
inline PilotEstimate estimate_pilot(const Waveform& trace, double nominal, double search_band,
                                    double track_band = 20e6) {
  detail::require(search_band > 0.0 && track_band > 0.0, "estimate_pilot: bands must be positive");
  const double fs = trace.sample_rate;
  const std::size_t n = trace.size();
  detail::require(n >= 64, "estimate_pilot: trace too short");

  CVector z = fft(trace.samples);
  std::size_t kp = 0;
  double peak = -1.0;
  std::vector<std::size_t> band_bins;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = bin_frequency(k, n, fs);
    if (std::abs(f - nominal) > search_band / 2.0) {
      z[k] = 0.0;
      continue;
    }
    band_bins.push_back(k);
    if (std::norm(z[k]) > peak) {
      peak = std::norm(z[k]);
      kp = k;
    }
  }
  if (band_bins.size() < 4) throw PilotLost("estimate_pilot: search band contains too few bins");
  const double f_peak = bin_frequency(kp, n, fs);
  double rest = 0.0;
  std::size_t rest_count = 0;
  for (auto k : band_bins) {
    if (std::abs(bin_frequency(k, n, fs) - f_peak) <= track_band / 2.0) continue;
    rest += std::norm(z[k]);
    ++rest_count;
  }
  const double ratio = rest_count > 0 && rest > 0.0 ? peak / (rest / static_cast<double>(rest_count)) : INFINITY;
  const double ratio_db = 10.0 * std::log10(ratio);
  if (!(ratio_db >= 20.0)) throw PilotLost("estimate_pilot: no dominant tone in the search band");
  ifft_inplace(z);  // band-limited analytic pilot

  const auto avg_len = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fs / track_band)));
  double f_mix = f_peak;
  PilotEstimate est;
  est.peak_to_mean_db = ratio_db;
  for (int pass = 0; pass < 2; ++pass) {
    const double w = 2.0 * std::numbers::pi * f_mix / fs;
    CVector b(n);
    for (std::size_t i = 0; i < n; ++i)
      b[i] = z[i] * std::polar(1.0, -std::remainder(w * static_cast<double>(i), 2.0 * std::numbers::pi));
    b = detail::moving_average(b, avg_len);
    RVector ph = detail::unwrap(b);
    auto [a, slope] = detail::fit_line(ph);
    // phase relative to the mixer: total = ph + w n
    est.freq = (slope + w) * fs / (2.0 * std::numbers::pi);
    est.intercept = a;
    for (std::size_t i = 0; i < n; ++i) ph[i] -= a + slope * static_cast<double>(i);
    est.phase_profile = std::move(ph);
    f_mix = est.freq;
  }
  return est;
}

/// Zero the band centre +/- width/2 (removes the pilot from the signal trace).
inline Waveform suppress_band(const Waveform& w, double centre, double width) {
  return {apply_spectral_gain(w.samples, w.sample_rate,
                              [&](double f) { return std::abs(f - centre) <= width / 2.0 ? 0.0 : 1.0; }),
          w.sample_rate, w.origin};
}

/// Shift by -(f_pilot_est - f_pilot_tx) and remove the pilot phase profile.
inline Waveform baseband_and_correct(const Waveform& signal, const PilotEstimate& pilot, double tx_pilot_freq,
                                     const RxConfig& cfg) {
  (void)cfg;
  detail::require(pilot.phase_profile.size() == signal.size(),
                  "baseband_and_correct: phase profile length differs from the signal length");
  const double w = 2.0 * std::numbers::pi * (pilot.freq - tx_pilot_freq) / signal.sample_rate;
  Waveform out = signal;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ph = std::remainder(w * static_cast<double>(i), 2.0 * std::numbers::pi) + pilot.phase_profile[i];
    if (ph != 0.0) out.samples[i] *= std::polar(1.0, -ph);
  }
  return out;
}

struct SyncResult {
  std::int64_t offset = 0;  // rx sample of symbol 0 (integer part)
  double fraction = 0.0;    // sub-sample refinement in [-0.5, 0.5]
  double peak_to_sidelobe_db = 0.0;

  double position() const { return static_cast<double>(offset) + fraction; }
};

namespace detail {

/// Unit-energy RRC matched filter evaluated at a (possibly fractional) rx position.
class MatchedFilter {
public:
  MatchedFilter(const RxConfig& cfg)
      : taps_(rrc_taps(cfg.rrc_rolloff, cfg.rrc_span, cfg.samples_per_symbol())),
        half_(static_cast<std::ptrdiff_t>(taps_.size() / 2)) {}

  cplx at_sample(const CVector& x, std::ptrdiff_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    cplx acc{};
    const std::ptrdiff_t lo = i - half_;
    if (lo >= 0 && i + half_ < n) {
      const cplx* px = x.data() + lo;
      for (std::size_t j = 0; j < taps_.size(); ++j) acc += px[j] * taps_[j];
    } else {
      for (std::size_t j = 0; j < taps_.size(); ++j) {
        const std::ptrdiff_t k = lo + static_cast<std::ptrdiff_t>(j);
        if (k >= 0 && k < n) acc += x[static_cast<std::size_t>(k)] * taps_[j];
      }
    }
    return acc;
  }

  cplx at(const CVector& x, double pos) const {
    const double fl = std::floor(pos);
    const auto i0 = static_cast<std::ptrdiff_t>(fl);
    const double frac = pos - fl;
    if (frac == 0.0) return at_sample(x, i0);
    return cubic_interpolate(at_sample(x, i0 - 1), at_sample(x, i0), at_sample(x, i0 + 1), at_sample(x, i0 + 2), frac);
  }

private:
  RVector taps_;
  std::ptrdiff_t half_;
};

}  // namespace detail

/// Offset maximising |cross-correlation| with the RRC-shaped reference. The
/// integer peak comes from an FFT correlation of the first sync_ref_symbols;
/// a parabolic fit of |sum zeta conj(alpha)| over up to timing_ref_symbols
/// symbols at the neighbouring samples gives the fraction.
inline SyncResult synchronize(const Waveform& rx, const SymbolStream& ref, const RxConfig& cfg) {
  cfg.validate();
  detail::require(ref.size() >= 1, "synchronize: empty reference");
  const double sps = cfg.samples_per_symbol();
  const std::size_t k_ref = std::min(cfg.sync_ref_symbols, ref.size());
  const CVector head(ref.symbols.begin(), ref.symbols.begin() + static_cast<std::ptrdiff_t>(k_ref));
  const auto ref_len = static_cast<std::size_t>(std::ceil(static_cast<double>(k_ref) * sps));
  const CVector refw = shape_symbols(head, cfg.symbol_rate, cfg.adc_rate, cfg.rrc_rolloff, cfg.rrc_span, 0, ref_len);

  detail::require(rx.size() > ref_len, "synchronize: received trace shorter than the reference");
  const std::size_t window = std::min(cfg.sync_search_window, rx.size() - ref_len + 1);
  std::size_t nfft = 1;
  while (nfft < window + ref_len) nfft <<= 1;
  CVector a(nfft), b(nfft);
  std::copy_n(rx.samples.begin(), std::min(nfft, rx.size()), a.begin());
  std::copy(refw.begin(), refw.end(), b.begin());
  fft_inplace(a);
  fft_inplace(b);
  for (std::size_t k = 0; k < nfft; ++k) a[k] *= std::conj(b[k]);
  ifft_inplace(a);  // a[l] = sum_n rx[l + n] conj(ref[n])

  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t l = 0; l < window; ++l) {
    const double m = std::abs(a[l]);
    if (m > best_mag) {
      best_mag = m;
      best = l;
    }
  }
  const auto excl = static_cast<std::size_t>(std::ceil(sps));
  double side = 0.0;
  for (std::size_t l = 0; l < window; ++l) {
    if ((l > best ? l - best : best - l) <= excl) continue;
    side = std::max(side, std::abs(a[l]));
  }
  SyncResult res;
  res.offset = static_cast<std::int64_t>(best);
  res.peak_to_sidelobe_db = side > 0.0 ? 20.0 * std::log10(best_mag / side) : INFINITY;
  if (!(best_mag > 0.0) || res.peak_to_sidelobe_db < cfg.min_peak_to_sidelobe_db)
    throw SyncFailure("synchronize: ambiguous correlation peak", res.peak_to_sidelobe_db);

  // data-aided fractional timing
  const detail::MatchedFilter mf(cfg);
  const std::size_t k_fine = std::min(cfg.timing_ref_symbols, ref.size());
  double c[3];
  for (int d = -1; d <= 1; ++d) {
    cplx acc{};
    for (std::size_t k = 0; k < k_fine; ++k) {
      const double pos = static_cast<double>(res.offset + d) + static_cast<double>(k) * sps;
      if (pos >= static_cast<double>(rx.size())) break;
      acc += mf.at(rx.samples, pos) * std::conj(ref.symbols[k]);
    }
    c[d + 1] = std::abs(acc);
  }
  const double den = c[0] - 2.0 * c[1] + c[2];
  if (den < 0.0) res.fraction = std::clamp(0.5 * (c[0] - c[2]) / den, -0.5, 0.5);
  return res;
}

/// RRC matched filter evaluated at symbol instants offset + k sps, divided by
/// snu_scale. Samples beyond the trace edges count as zero; a symbol centre
/// outside the trace is a length mismatch.
inline RecoveredSymbols matched_filter_downsample(const Waveform& rx, const SyncResult& sync, std::size_t n_symbols,
                                                  const RxConfig& cfg, double snu_scale = 1.0) {
  cfg.validate();
  detail::require(snu_scale > 0.0, "matched_filter_downsample: snu_scale must be positive");
  detail::require(n_symbols >= 1, "matched_filter_downsample: no symbols requested");
  const double sps = cfg.samples_per_symbol();
  const double first = sync.position();
  const double last = first + static_cast<double>(n_symbols - 1) * sps;
  if (first < 0.0 || last > static_cast<double>(rx.size() - 1))
    throw InvalidArgument("matched_filter_downsample: length mismatch, block extends beyond the trace");
  const detail::MatchedFilter mf(cfg);
  RecoveredSymbols out;
  out.symbols.resize(n_symbols);
  const double inv = 1.0 / snu_scale;
  for (std::size_t k = 0; k < n_symbols; ++k) out.symbols[k] = inv * mf.at(rx.samples, first + static_cast<double>(k) * sps);
  out.alignment_offset = first;
  out.peak_to_sidelobe_db = sync.peak_to_sidelobe_db;
  return out;
}

/// Global phase theta* = arg(sum zeta conj(alpha)), removed from the symbols.
inline RecoveredSymbols residual_rotation(RecoveredSymbols sym, const SymbolStream& ref) {
  detail::require(sym.size() == ref.size(), "residual_rotation: length mismatch");
  cplx acc{};
  for (std::size_t k = 0; k < sym.size(); ++k) acc += sym.symbols[k] * std::conj(ref.symbols[k]);
  if (std::abs(acc) == 0.0) throw InvalidArgument("residual_rotation: zero cross-correlation");
  const double theta = std::arg(acc);
  const cplx r = std::polar(1.0, -theta);
  for (auto& v : sym.symbols) v *= r;
  sym.residual_rotation += theta;
  return sym;
}

/// Intermediate products of a full receiver run.
struct RxResult {
  RecoveredSymbols symbols;
  ShotNoiseCalibration calibration;
  std::shared_ptr<const WhiteningFilter> whitening;
  double pilot_freq = 0.0;
  double pilot_peak_to_mean_db = 0.0;
  SyncResult sync;
};

/// Whitening (one filter object for all three traces), SNU calibration, pilot
/// tracking, pilot removal, carrier correction, sync, matched filter, rotation.
inline RxResult recover_symbols(const HeterodyneTraces& signal, const CalibrationTraces& cal, const SymbolStream& ref,
                                const RxConfig& cfg) {
  cfg.validate();
  RxResult res;
  const Waveform vac = cal.vacuum.combined();
  const Waveform el = cal.electronic.combined();
  res.whitening = std::make_shared<const WhiteningFilter>(whitening_filter(vac, el, cfg.whitening_taps, cfg.welch_nfft));
  const WhiteningFilter& wf = *res.whitening;
  res.calibration = snu_calibrate(wf.apply(vac), wf.apply(el));

  Waveform w = wf.apply(signal.combined());
  PilotEstimate pilot = estimate_pilot(w, cfg.pilot_freq_nominal, cfg.pilot_search_band, cfg.pilot_track_band);
  res.pilot_freq = pilot.freq;
  res.pilot_peak_to_mean_db = pilot.peak_to_mean_db;
  w = suppress_band(w, cfg.pilot_freq_nominal, cfg.pilot_search_band);
  w = baseband_and_correct(w, pilot, cfg.tx_pilot_freq, cfg);
  pilot.phase_profile = {};
  res.sync = synchronize(w, ref, cfg);
  RecoveredSymbols rec = matched_filter_downsample(w, res.sync, ref.size(), cfg, res.calibration.snu_scale);
  rec.pilot_freq_estimate = res.pilot_freq;
  res.symbols = residual_rotation(std::move(rec), ref);
  return res;
}

}  // namespace cvqkd
