#pragma once

#include <cstddef>

#include "cvqkd/waveform.hpp"

namespace cvqkd {

/// Receiver output: one SNU-calibrated complex value per transmitted symbol.
struct RecoveredSymbols {
  CVector symbols;                   // zeta_k, per-quadrature SNU
  double alignment_offset = 0.0;     // samples (rx trace) of symbol 0
  double pilot_freq_estimate = 0.0;  // Hz
  double residual_rotation = 0.0;    // radians applied by residual_rotation()
  double peak_to_sidelobe_db = 0.0;  // synchronisation quality

  std::size_t size() const noexcept { return symbols.size(); }
};

}  // namespace cvqkd
