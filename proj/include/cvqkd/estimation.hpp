#pragma once

// Shot-noise calibration, channel parameter estimation and worst-case bounds.
//
// Per-quadrature model, with x_A = 2 Re(alpha) and p_A = 2 Im(alpha) the
// prepared quadratures (variance V_M each):
//
//   zeta_x = t * x_A + n_x,   t = sqrt(eta T / 2),
//   var(n_x) = 1 + eta T eps / 2 + v_el.
//
// Both quadratures are pooled, so a block of N symbols gives 2N real samples.

#include <cmath>
#include <cstddef>
#include <optional>

#include "cvqkd/constellation.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/params.hpp"
#include "cvqkd/recovered.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

struct ShotNoiseCalibration {
  double snu_scale = 0.0;            // linear units per sqrt(SNU), per quadrature
  double v_el_hat = 0.0;             // SNU
  double vacuum_variance = 0.0;      // per quadrature, linear units^2
  double electronic_variance = 0.0;  // per quadrature, linear units^2
};

/// snu_scale^2 = var(vacuum) - var(electronic), v_el = var(electronic) / snu_scale^2.
/// Both traces should already be whitened with the same filter.
inline ShotNoiseCalibration snu_calibrate(const Waveform& vacuum, const Waveform& electronic) {
  const double vv = quadrature_variance(vacuum.samples);
  const double ve = quadrature_variance(electronic.samples);
  if (!(vv - ve > 0.0)) throw CalibrationError("shot-noise estimate is not positive (vacuum variance <= electronic variance)");
  ShotNoiseCalibration cal;
  cal.vacuum_variance = vv;
  cal.electronic_variance = ve;
  cal.snu_scale = std::sqrt(vv - ve);
  cal.v_el_hat = ve / (vv - ve);
  return cal;
}

struct EstimatedParams {
  double t_hat = 0.0;          // per-quadrature amplitude gain, sqrt(eta T / 2)
  double noise_var = 0.0;      // sigma^2, per-quadrature residual variance in SNU
  double T_hat = 0.0;
  double eps_hat = 0.0;        // clamped at 0
  double eps_hat_raw = 0.0;    // unclamped estimator output
  double v_el_hat = 0.0;
  double v_mod_meas = 0.0;     // two-quadrature modulation variance of the reference
  double eta = 0.0;
  std::size_t block_N = 0;

  // Filled by worst_case().
  bool has_bounds = false;
  double T_low = 0.0;
  double eps_up = 0.0;
  double eps_up_raw = 0.0;
  double z_pe = 6.5;
  double eps_pe_fail = 1e-10;
};

namespace detail {

inline double excess_from_noise(double noise_var, double v_el, double eta, double transmittance) {
  return 2.0 * (noise_var - 1.0 - v_el) / (eta * transmittance);
}

}  // namespace detail

/// Point estimates from aligned reference/received symbol pairs.
inline EstimatedParams estimate_channel(const SymbolStream& tx, const RecoveredSymbols& rx, const DetectorParams& det,
                                        double v_el_hat) {
  detail::require(tx.size() == rx.size(), "estimate_channel: length mismatch between reference and received symbols");
  detail::require(tx.size() >= 2, "estimate_channel: need at least two symbols");
  det.validate();
  const auto n = static_cast<double>(tx.size());

  double t_sum = 0.0, resid_sum = 0.0, vmod_sum = 0.0;
  for (int quad = 0; quad < 2; ++quad) {
    auto ref_of = [&](std::size_t i) { return 2.0 * (quad == 0 ? tx.symbols[i].real() : tx.symbols[i].imag()); };
    auto obs_of = [&](std::size_t i) { return quad == 0 ? rx.symbols[i].real() : rx.symbols[i].imag(); };
    double ma = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
      ma += ref_of(i);
      mz += obs_of(i);
    }
    ma /= n;
    mz /= n;
    double saa = 0.0, sza = 0.0, szz = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
      const double a = ref_of(i) - ma, z = obs_of(i) - mz;
      saa += a * a;
      sza += z * a;
      szz += z * z;
    }
    if (!(saa > 1e-12 * n)) throw InvalidArgument("estimate_channel: reference modulation variance is ~0");
    const double t = sza / saa;
    t_sum += t;
    // Residual variance of zeta - t a with the fitted slope (n - 2 degrees of freedom).
    resid_sum += (szz - t * sza) / (n - 2.0);
    vmod_sum += saa / (n - 1.0);
  }

  EstimatedParams est;
  est.t_hat = 0.5 * t_sum;
  est.noise_var = 0.5 * resid_sum;
  est.v_mod_meas = 0.5 * vmod_sum;
  est.eta = det.efficiency;
  est.v_el_hat = v_el_hat;
  est.block_N = tx.size();
  est.T_hat = 2.0 * est.t_hat * est.t_hat / det.efficiency;
  est.eps_hat_raw = detail::excess_from_noise(est.noise_var, v_el_hat, det.efficiency, est.T_hat);
  est.eps_hat = std::max(0.0, est.eps_hat_raw);
  return est;
}

/// Estimates that a perfect estimator would return for known truth; used to
/// evaluate published parameter sets without simulation.
inline EstimatedParams nominal_estimates(double v_mod, double transmittance, double eps, double v_el, double eta,
                                         std::size_t block_N) {
  detail::require(transmittance > 0.0 && eta > 0.0, "nominal_estimates: need T > 0 and eta > 0");
  EstimatedParams est;
  est.t_hat = std::sqrt(eta * transmittance / 2.0);
  est.noise_var = 1.0 + eta * transmittance * eps / 2.0 + v_el;
  est.T_hat = transmittance;
  est.eps_hat = est.eps_hat_raw = eps;
  est.v_el_hat = v_el;
  est.v_mod_meas = v_mod;
  est.eta = eta;
  est.block_N = block_N;
  return est;
}

/// Worst-case transmittance and excess noise at `z_pe` standard deviations.
///
///   sigma_t^2   = sigma^2 / (2N V_M)          (t averaged over both quadratures)
///   t_low       = t_hat - z sigma_t,           T_low = 2 t_low^2 / eta
///   sigma_up^2  = sigma^2 (1 + z sqrt(2/N))
///   eps_up      = 2 (sigma_up^2 - 1 - v_el) / (eta T_hat)
///
/// The whole block is used for estimation; no symbols are sacrificed.
inline EstimatedParams worst_case(EstimatedParams est, double z_pe = 6.5, double eps_pe_fail = 1e-10) {
  detail::require(est.block_N >= 2, "worst_case: block size not set");
  detail::require(z_pe >= 0.0, "worst_case: z_pe must be >= 0");
  detail::require(est.v_mod_meas > 0.0 && est.eta > 0.0, "worst_case: incomplete estimates");
  const auto n = static_cast<double>(est.block_N);
  const double sigma_t = std::sqrt(est.noise_var / (2.0 * n * est.v_mod_meas));
  const double t_low = est.t_hat - z_pe * sigma_t;
  if (!(t_low > 0.0)) throw InvalidArgument("worst_case: block too small, lower transmittance bound is not positive");
  est.z_pe = z_pe;
  est.eps_pe_fail = eps_pe_fail;
  const double noise_up = est.noise_var * (1.0 + z_pe * std::sqrt(2.0 / n));
  est.eps_up_raw = detail::excess_from_noise(noise_up, est.v_el_hat, est.eta, est.T_hat);
  if (z_pe == 0.0) {
    // avoid the t -> T round trip so the bounds equal the point estimates exactly
    est.T_low = est.T_hat;
    est.eps_up = est.eps_hat;
  } else {
    est.T_low = std::min(est.T_hat, 2.0 * t_low * t_low / est.eta);
    est.eps_up = std::max(est.eps_hat, est.eps_up_raw);
  }
  est.has_bounds = true;
  return est;
}

}  // namespace cvqkd
