#pragma once

#include <cmath>
#include <optional>

#include "cvqkd/error.hpp"

namespace cvqkd {

/// T = eta_D * 10^(-loss * d / 10).
inline double fiber_transmittance(double distance_km, double loss_db_per_km, double coupling_eff) {
  detail::require(distance_km >= 0.0, "distance must be non-negative");
  detail::require(loss_db_per_km >= 0.0, "loss coefficient must be non-negative");
  detail::require(coupling_eff >= 0.0 && coupling_eff <= 1.0, "coupling efficiency must lie in [0, 1]");
  return coupling_eff * std::pow(10.0, -loss_db_per_km * distance_km / 10.0);
}

/// Physical truth of the quantum channel.
struct ChannelParams {
  double distance_km = 0.0;
  double loss_db_per_km = 0.2;
  double coupling_eff = 1.0;
  double excess_noise = 0.0;   // SNU, referred to channel input
  double freq_offset_hz = 0.0; // signal laser minus LO
  double linewidth_hz = 100.0; // per laser
  std::optional<double> transmittance_override;

  double transmittance() const {
    const double t = transmittance_override ? *transmittance_override
                                            : fiber_transmittance(distance_km, loss_db_per_km, coupling_eff);
    detail::require(t >= 0.0 && t <= 1.0, "total transmittance must lie in [0, 1]");
    return t;
  }

  void validate() const {
    (void)transmittance();
    detail::require(excess_noise >= 0.0 && std::isfinite(excess_noise), "excess noise must be >= 0");
    detail::require(linewidth_hz >= 0.0, "linewidth must be >= 0");
  }
};

/// Trusted heterodyne receiver.
struct DetectorParams {
  double efficiency = 0.44;
  double v_el = 0.0;              // SNU per output quadrature
  double adc_rate = 80e9;
  int adc_bits = 8;
  double rx_bandwidth_hz = 20e9;  // -3 dB point of the receiver roll-off; <= 0 means flat
  double full_scale_rms = 6.0;    // ADC full scale as a multiple of trace RMS
  double max_clip_fraction = 1e-3;

  void validate() const {
    detail::require(efficiency > 0.0 && efficiency <= 1.0, "detector efficiency must lie in (0, 1]");
    detail::require(v_el >= 0.0 && std::isfinite(v_el), "electronic noise must be >= 0");
    detail::require(adc_rate > 0.0, "adc rate must be positive");
    detail::require(adc_bits >= 0 && adc_bits <= 24, "adc_bits must lie in [0, 24] (0 disables quantisation)");
    detail::require(full_scale_rms > 0.0, "full scale must be positive");
  }
};

}  // namespace cvqkd
