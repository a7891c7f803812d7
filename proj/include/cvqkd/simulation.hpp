#pragma once

// End-to-end link: symbols -> transmitter -> fibre -> receiver -> estimation -> key rate.

#include <cstdint>
#include <string>

#include "cvqkd/channel.hpp"
#include "cvqkd/constellation.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/rxdsp.hpp"
#include "cvqkd/txdsp.hpp"

namespace cvqkd {

struct SimulationConfig {
  int M = 64;
  double nu = 0.129;
  double v_mod = 1.03;
  TxConfig tx = TxConfig::for_symbol_rate(8e9);
  ChannelParams channel;
  DetectorParams detector;
  RxConfig rx;                   // symbol/adc/pilot fields are synchronised from tx/detector
  std::size_t block_N = 1000000;
  std::size_t guard_symbols = 1024;  // random symbols before and after the block
  std::size_t calibration_samples = 1 << 21;
  double beta = 0.95;
  double z_pe = 6.5;
  double eps_pe_fail = 1e-10;
  std::uint64_t seed = 1;

  /// rx settings that must agree with the transmitter and detector.
  RxConfig effective_rx() const {
    RxConfig r = rx;
    r.symbol_rate = tx.symbol_rate;
    r.adc_rate = detector.adc_rate;
    r.rrc_rolloff = tx.rrc_rolloff;
    r.rrc_span = tx.rrc_span;
    r.pilot_freq_nominal = tx.pilot_freq;
    r.tx_pilot_freq = tx.pilot_freq;
    return r;
  }

  void validate() const {
    (void)grid_side(M);
    detail::require(block_N >= 1000, "block_N must be >= 1000");
    detail::require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
    detail::require(z_pe >= 0.0, "z_pe must be >= 0");
    tx.validate();
    channel.validate();
    detector.validate();
    effective_rx().validate();
  }
};

/// Labels which stage an error came from.
class StageError : public Error {
public:
  StageError(std::string stage, const std::exception& e)
      : Error(stage + ": " + e.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

struct SimulationResult {
  Constellation constellation;
  SymbolStream reference;  // Alice's block
  RxResult rx;
  EstimatedParams estimates;
  KeyRateReport report;
  std::uint64_t symbol_seed = 0;
};

namespace seed_stream {
inline constexpr std::uint64_t block_symbols = 10;
inline constexpr std::uint64_t guard_before = 11;
inline constexpr std::uint64_t guard_after = 12;
inline constexpr std::uint64_t channel = 20;
inline constexpr std::uint64_t detector = 30;
inline constexpr std::uint64_t calibration = 40;
}  // namespace seed_stream

inline SimulationResult simulate_link(const SimulationConfig& cfg) {
  cfg.validate();
  auto stage = [](const char* name, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e);
    }
  };

  SimulationResult out;
  const double s = cfg.tx.symbol_rate;
  out.constellation = build_constellation(cfg.M, cfg.nu, cfg.v_mod);
  out.symbol_seed = derive_seed(cfg.seed, seed_stream::block_symbols);
  out.reference = sample_symbols(out.constellation, cfg.block_N, out.symbol_seed, s);

  HeterodyneTraces traces = stage("tx/channel", [&] {
    SymbolStream full;
    full.rate = s;
    if (cfg.guard_symbols > 0) {
      full.symbols = sample_symbols(out.constellation, cfg.guard_symbols, derive_seed(cfg.seed, seed_stream::guard_before), s).symbols;
    }
    full.symbols.insert(full.symbols.end(), out.reference.symbols.begin(), out.reference.symbols.end());
    if (cfg.guard_symbols > 0) {
      const auto after = sample_symbols(out.constellation, cfg.guard_symbols, derive_seed(cfg.seed, seed_stream::guard_after), s);
      full.symbols.insert(full.symbols.end(), after.symbols.begin(), after.symbols.end());
    }
    Waveform tx = transmit(full, cfg.tx);
    full = {};
    Waveform ch = propagate(tx, cfg.channel, derive_seed(cfg.seed, seed_stream::channel));
    tx = {};
    return detect(ch, cfg.detector, derive_seed(cfg.seed, seed_stream::detector));
  });

  const CalibrationTraces cal = stage("calibration", [&] {
    return calibration_traces(cfg.detector, cfg.calibration_samples, derive_seed(cfg.seed, seed_stream::calibration));
  });

  out.rx = stage("rx", [&] { return recover_symbols(traces, cal, out.reference, cfg.effective_rx()); });
  traces = {};

  out.estimates = stage("estimation", [&] {
    EstimatedParams est = estimate_channel(out.reference, out.rx.symbols, cfg.detector, out.rx.calibration.v_el_hat);
    return worst_case(est, cfg.z_pe, cfg.eps_pe_fail);
  });

  out.report = stage("keyrate", [&] {
    DetectorParams det = cfg.detector;
    det.v_el = out.estimates.v_el_hat;
    KeyRateReport r = asymptotic_rate(out.constellation, {cfg.v_mod, out.estimates.T_hat, out.estimates.eps_hat}, det,
                                      cfg.beta, s);
    r.distance_km = cfg.channel.distance_km;
    r.block_N = cfg.block_N;
    return finite_rate(r, out.estimates);
  });
  return out;
}

}  // namespace cvqkd
