#pragma once

// Transmitter DSP: RRC pulse shaping at the DAC rate, regularised pre-emphasis
// and the frequency-multiplexed pilot tone.
//
// Output amplitudes are photon-flux amplitudes in sqrt(photons/ns): a symbol
// alpha carries |alpha|^2 photons, so A(t) = sqrt(s / 1e9) sum_k alpha_k p(t s - k)
// with p the unit-energy RRC pulse in symbol time.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cvqkd/constellation.hpp"
#include "cvqkd/dsp.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/fft.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

struct TxConfig {
  double symbol_rate = 10e9;  // symbols/s
  double dac_rate = 32e9;
  double rrc_rolloff = 0.2;
  int rrc_span = 32;          // symbols
  double pilot_freq = 8e9;
  double pilot_amp_ratio = 10.0;  // pilot amplitude / signal RMS (20 dB)
  FrequencyResponse tx_response = FrequencyResponse::gaussian(8e9);
  double preemphasis_floor = 0.1;
  bool simulate_tx_response = true;  // apply tx_response after pre-emphasis as the hardware stand-in

  /// Defaults for the two operating symbol rates (pilot at 8 GHz for 10 GBd, 7 GHz for 8 GBd).
  static TxConfig for_symbol_rate(double rate) {
    TxConfig c;
    c.symbol_rate = rate;
    c.pilot_freq = std::abs(rate - 8e9) < 1.0 ? 7e9 : 8e9;
    return c;
  }

  double signal_half_bandwidth() const { return symbol_rate * (1.0 + rrc_rolloff) / 2.0; }

  void validate() const {
    detail::require(symbol_rate > 0.0 && dac_rate > 0.0, "symbol and DAC rates must be positive");
    detail::check_rrc_args(rrc_rolloff, rrc_span, dac_rate / symbol_rate);
    detail::require(signal_half_bandwidth() < dac_rate / 2.0, "signal band exceeds the DAC Nyquist frequency");
    detail::require(pilot_freq > signal_half_bandwidth(), "pilot must lie outside the signal band");
    detail::require(pilot_freq < dac_rate / 2.0, "pilot must lie below the DAC Nyquist frequency");
    detail::require(pilot_amp_ratio >= 0.0, "pilot amplitude ratio must be >= 0");
    detail::require(preemphasis_floor >= 0.0, "pre-emphasis floor must be >= 0");
  }
};

/// Samples before symbol 0: enough for the full leading half of the pulse.
inline std::int64_t shaping_lead(double rolloff, int span, double symbol_rate, double sample_rate) {
  (void)rolloff;
  const Ratio r = rational_ratio(sample_rate / symbol_rate);
  return (static_cast<std::int64_t>(span) / 2 * r.p + r.q - 1) / r.q;
}

/// Polyphase RRC interpolation of a symbol sequence onto a sample grid.
/// Symbol k is centred on output sample lead + k * sample_rate / symbol_rate.
inline CVector shape_symbols(const CVector& symbols, double symbol_rate, double sample_rate, double rolloff, int span,
                             std::int64_t lead, std::size_t n_out, double amplitude_scale = 1.0) {
  const Ratio r = rational_ratio(sample_rate / symbol_rate);
  detail::check_rrc_args(rolloff, span, r.value());
  const int half = span / 2;
  // bank[ph][j + half] = p(ph / p + j), zero beyond the span
  std::vector<RVector> bank(static_cast<std::size_t>(r.p), RVector(static_cast<std::size_t>(span + 1)));
  for (std::int64_t ph = 0; ph < r.p; ++ph) {
    for (int j = -half; j <= half; ++j) {
      const double t = static_cast<double>(ph) / static_cast<double>(r.p) + j;
      bank[static_cast<std::size_t>(ph)][static_cast<std::size_t>(j + half)] =
          std::abs(t) <= half ? amplitude_scale * rrc_pulse(t, rolloff) : 0.0;
    }
  }
  CVector out(n_out);
  const auto n_sym = static_cast<std::int64_t>(symbols.size());
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::int64_t u = (static_cast<std::int64_t>(m) - lead) * r.q;  // symbol time * p
    std::int64_t kc = u / r.p, ph = u % r.p;
    if (ph < 0) {
      ph += r.p;
      --kc;
    }
    const auto& taps = bank[static_cast<std::size_t>(ph)];
    cplx acc{};
    for (int j = -half; j <= half; ++j) {
      const std::int64_t k = kc - j;
      if (k < 0 || k >= n_sym) continue;
      acc += symbols[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(j + half)];
    }
    out[m] = acc;
  }
  return out;
}

/// Upsample and RRC-shape. Length is ceil(n p/q) + 2 lead, where p/q = dac_rate / symbol_rate
/// and lead = ceil(span/2 * p/q); symbol k peaks at sample lead + k p/q.
inline Waveform upsample_shape(const SymbolStream& sym, const TxConfig& cfg) {
  detail::require(sym.size() >= 1, "upsample_shape: empty symbol stream");
  detail::require(sym.rate <= 0.0 || std::abs(sym.rate - cfg.symbol_rate) <= 1e-9 * cfg.symbol_rate,
                  "upsample_shape: stream rate differs from configured symbol rate");
  const Ratio r = rational_ratio(cfg.dac_rate / cfg.symbol_rate);
  const std::int64_t lead = shaping_lead(cfg.rrc_rolloff, cfg.rrc_span, cfg.symbol_rate, cfg.dac_rate);
  const auto n = static_cast<std::int64_t>(sym.size());
  const std::int64_t body = (n * r.p + r.q - 1) / r.q;
  const auto n_out = static_cast<std::size_t>(body + 2 * lead);
  const double scale = std::sqrt(cfg.symbol_rate * 1e-9);
  return {shape_symbols(sym.symbols, cfg.symbol_rate, cfg.dac_rate, cfg.rrc_rolloff, cfg.rrc_span, lead, n_out, scale),
          cfg.dac_rate, Origin::tx};
}

/// Steady-state mean power |A|^2 (photons/ns) of a shaped stream with modulation variance V_M.
inline double expected_tx_power(double v_mod, double symbol_rate) { return symbol_rate * 1e-9 * v_mod / 2.0; }

/// Multiply the spectrum by the (possibly simulated) hardware response.
inline Waveform apply_response(const Waveform& w, const FrequencyResponse& h) {
  if (h.kind == FrequencyResponse::Kind::flat) return w;
  return {apply_spectral_gain(w.samples, w.sample_rate, [&](double f) { return h(f); }), w.sample_rate, w.origin};
}

/// Regularised inverse: spectrum x 1/max(|H|, floor) with the phase of 1/H.
inline Waveform pre_emphasis(const Waveform& w, const FrequencyResponse& h, double floor) {
  detail::require(floor >= 0.0, "pre_emphasis: floor must be >= 0");
  if (h.kind == FrequencyResponse::Kind::flat) return w;
  auto gain = [&](double f) -> cplx {
    const cplx hv = h(f);
    const double mag = std::abs(hv);
    if (mag == 0.0) {
      if (floor == 0.0) throw InvalidArgument("pre_emphasis: response has a zero and the floor is 0");
      return 1.0 / floor;
    }
    return std::conj(hv) / mag / std::max(mag, floor);
  };
  return {apply_spectral_gain(w.samples, w.sample_rate, gain), w.sample_rate, w.origin};
}

/// samples[i] += amp exp(j 2 pi f i / rate). `signal_half_band` > 0 rejects pilots inside the signal band.
inline Waveform add_pilot(const Waveform& w, double pilot_freq, double pilot_amp, double signal_half_band = 0.0) {
  detail::require(std::abs(pilot_freq) < w.sample_rate / 2.0, "add_pilot: pilot beyond Nyquist");
  if (signal_half_band > 0.0 && std::abs(pilot_freq) <= signal_half_band)
    throw InvalidArgument("add_pilot: pilot inside the signal band");
  detail::require(pilot_amp >= 0.0, "add_pilot: amplitude must be >= 0");
  Waveform out = w;
  if (pilot_amp == 0.0) return out;
  const double step = 2.0 * std::numbers::pi * pilot_freq / w.sample_rate;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] += std::polar(pilot_amp, std::remainder(step * static_cast<double>(i), 2.0 * std::numbers::pi));
  return out;
}

/// Full transmitter: shape, pre-emphasise, add the pilot, pass the hardware stand-in.
/// Pilot amplitude = pilot_amp_ratio x RMS of the shaped signal.
inline Waveform transmit(const SymbolStream& sym, const TxConfig& cfg) {
  cfg.validate();
  Waveform w = upsample_shape(sym, cfg);
  const double rms = std::sqrt(mean_power(w.samples));
  if (cfg.simulate_tx_response) w = pre_emphasis(w, cfg.tx_response, cfg.preemphasis_floor);
  w = add_pilot(w, cfg.pilot_freq, cfg.pilot_amp_ratio * rms, cfg.signal_half_bandwidth());
  if (cfg.simulate_tx_response) w = apply_response(w, cfg.tx_response);
  return w;
}

}  // namespace cvqkd
