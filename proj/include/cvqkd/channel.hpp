#pragma once

// Fibre propagation and the trusted heterodyne receiver.
//
// Units: channel waveforms are photon-flux amplitudes A in sqrt(photons/ns).
// The detector maps them onto samples in which vacuum noise has variance 1 per
// quadrature per sample (before the receiver roll-off):
//
//   y[n] = sqrt(2 eta / (f_adc ns)) A(t_n) + shot + electronic.
//
// With a unit-energy matched filter at the symbol instants this gives
// zeta = sqrt(2 eta T) alpha + noise, i.e. x-quadrature gain sqrt(eta T / 2) on 2 Re(alpha).

#include <cmath>
#include <cstdint>
#include <numbers>

#include "cvqkd/dsp.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/random.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

namespace seed_stream {
inline constexpr std::uint64_t excess_noise = 1;
inline constexpr std::uint64_t phase_noise = 2;
inline constexpr std::uint64_t shot_noise = 3;
inline constexpr std::uint64_t electronic_noise = 4;
inline constexpr std::uint64_t vacuum_trace = 5;
inline constexpr std::uint64_t electronic_trace = 6;
}  // namespace seed_stream

/// sqrt(T) loss, excess noise T eps / 2 per symbol quadrature (channel-input
/// convention), carrier offset and Wiener phase noise of both lasers.
inline Waveform propagate(const Waveform& w, const ChannelParams& ch, std::uint64_t seed) {
  if (w.origin != Origin::tx) throw InvalidArgument("propagate: input waveform must originate at tx");
  ch.validate();
  const double t = ch.transmittance();
  const double dt = 1.0 / w.sample_rate;
  // complex noise variance per sample = (T eps / 2) * samples per ns
  const double noise_var_quad = 0.25 * t * ch.excess_noise * w.sample_rate * 1e-9;
  const double phase_step_std = std::sqrt(2.0 * std::numbers::pi * 2.0 * ch.linewidth_hz * dt);
  const double w_off = 2.0 * std::numbers::pi * ch.freq_offset_hz * dt;

  Rng noise(derive_seed(seed, seed_stream::excess_noise));
  Rng phase(derive_seed(seed, seed_stream::phase_noise));
  const double st = std::sqrt(t);
  Waveform out{CVector(w.size()), w.sample_rate, Origin::channel};
  double phi = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double carrier = std::remainder(w_off * static_cast<double>(i), 2.0 * std::numbers::pi) + phi;
    cplx v = st * w.samples[i];
    if (noise_var_quad > 0.0) v += noise.complex_normal(noise_var_quad);
    out.samples[i] = (carrier != 0.0) ? v * std::polar(1.0, carrier) : v;
    if (phase_step_std > 0.0) phi += phase_step_std * phase.normal();
  }
  return out;
}

/// Two phase-diverse outputs of the intradyne receiver, sampled by the ADC.
struct HeterodyneTraces {
  RVector x;
  RVector p;
  double sample_rate = 0.0;
  Origin origin = Origin::rx;
  std::size_t clipped = 0;  // samples beyond full scale, both traces together

  std::size_t size() const noexcept { return x.size(); }

  /// x + i p as a complex waveform.
  Waveform combined() const {
    CVector s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = {x[i], p[i]};
    return {std::move(s), sample_rate, origin};
  }
};

namespace detail {

/// Mid-rise quantiser with full scale = fs_rms x RMS of the trace; returns clipped count.
inline std::size_t quantize_inplace(RVector& v, int bits, double fs_rms) {
  if (bits <= 0 || v.empty()) return 0;
  double ms = 0.0;
  for (double s : v) ms += s * s;
  const double rms = std::sqrt(ms / static_cast<double>(v.size()));
  if (rms == 0.0) return 0;
  const double fs = fs_rms * rms;
  const double levels = std::ldexp(1.0, bits);
  const double step = 2.0 * fs / levels;
  const double top = fs - 0.5 * step;
  std::size_t clipped = 0;
  for (auto& s : v) {
    if (std::abs(s) > fs) ++clipped;
    const double q = (std::floor(s / step) + 0.5) * step;
    s = std::clamp(q, -top, top);
  }
  return clipped;
}

inline void finish_detection(CVector& y, const DetectorParams& det, HeterodyneTraces& out) {
  if (det.rx_bandwidth_hz > 0.0) OnePoleLowpass(det.rx_bandwidth_hz, det.adc_rate).process_inplace(y);
  out.x.resize(y.size());
  out.p.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out.x[i] = y[i].real();
    out.p[i] = y[i].imag();
  }
  out.sample_rate = det.adc_rate;
  out.clipped = quantize_inplace(out.x, det.adc_bits, det.full_scale_rms) +
                quantize_inplace(out.p, det.adc_bits, det.full_scale_rms);
  const double rate = static_cast<double>(out.clipped) / (2.0 * static_cast<double>(y.size()));
  if (rate > det.max_clip_fraction)
    throw ClippingError("ADC clipping rate " + std::to_string(rate) + " exceeds the configured limit", rate);
}

}  // namespace detail

/// Resample to the ADC rate, apply sqrt(eta), add shot and electronic noise, the
/// receiver roll-off and the ADC. x and p are the real and imaginary parts of one
/// complex detection, so they are exactly 90 degrees apart.
inline HeterodyneTraces detect(const Waveform& w, const DetectorParams& det, std::uint64_t seed) {
  if (w.origin != Origin::channel) throw InvalidArgument("detect: input waveform must originate at the channel");
  det.validate();
  CVector y;
  if (std::abs(w.sample_rate - det.adc_rate) <= 1e-9 * det.adc_rate) {
    y = w.samples;
  } else {
    y = RationalResampler(w.sample_rate, det.adc_rate).process(w.samples);
  }
  const double gain = std::sqrt(2.0 * det.efficiency / (det.adc_rate * 1e-9));
  Rng shot(derive_seed(seed, seed_stream::shot_noise));
  Rng elec(derive_seed(seed, seed_stream::electronic_noise));
  for (auto& v : y) {
    v = gain * v + shot.complex_normal(1.0);
    if (det.v_el > 0.0) v += elec.complex_normal(det.v_el);
  }
  HeterodyneTraces out;
  out.origin = Origin::rx;
  detail::finish_detection(y, det, out);
  return out;
}

struct CalibrationTraces {
  HeterodyneTraces vacuum;      // signal off, LO on
  HeterodyneTraces electronic;  // signal off, LO off
};

/// Vacuum and electronic-noise records through the same receiver response and ADC.
inline CalibrationTraces calibration_traces(const DetectorParams& det, std::size_t n, std::uint64_t seed) {
  detail::require(n >= 10000, "calibration_traces: need at least 1e4 samples");
  det.validate();
  CalibrationTraces out;
  {
    Rng shot(derive_seed(seed, seed_stream::vacuum_trace));
    Rng elec(derive_seed(derive_seed(seed, seed_stream::vacuum_trace), seed_stream::electronic_noise));
    CVector y(n);
    for (auto& v : y) {
      v = shot.complex_normal(1.0);
      if (det.v_el > 0.0) v += elec.complex_normal(det.v_el);
    }
    out.vacuum.origin = Origin::vacuum_cal;
    detail::finish_detection(y, det, out.vacuum);
  }
  {
    Rng elec(derive_seed(seed, seed_stream::electronic_trace));
    CVector y(n);
    if (det.v_el > 0.0)
      for (auto& v : y) v = elec.complex_normal(det.v_el);
    out.electronic.origin = Origin::electronic_cal;
    detail::finish_detection(y, det, out.electronic);
  }
  return out;
}

}  // namespace cvqkd
