#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "cvqkd/error.hpp"

namespace cvqkd {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

enum class Origin { tx, channel, rx, vacuum_cal, electronic_cal };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::tx: return "tx";
    case Origin::channel: return "channel";
    case Origin::rx: return "rx";
    case Origin::vacuum_cal: return "vacuum_cal";
    case Origin::electronic_cal: return "electronic_cal";
  }
  return "?";
}

inline Origin origin_from_string(std::string_view s) {
  if (s == "tx") return Origin::tx;
  if (s == "channel") return Origin::channel;
  if (s == "rx") return Origin::rx;
  if (s == "vacuum_cal") return Origin::vacuum_cal;
  if (s == "electronic_cal") return Origin::electronic_cal;
  throw InvalidArgument("unknown waveform origin '" + std::string(s) + "'");
}

/// Sampled complex baseband signal.
///
/// Units depend on the stage: at tx and channel the samples are photon-flux
/// amplitudes in sqrt(photons/ns); at rx and for calibration traces they are
/// detector units in which unit-variance white noise per quadrature is one
/// shot-noise unit per sample.
struct Waveform {
  CVector samples;
  double sample_rate = 0.0;  // samples/s
  Origin origin = Origin::tx;

  Waveform() = default;
  Waveform(CVector s, double rate, Origin o) : samples(std::move(s)), sample_rate(rate), origin(o) {
    detail::require(sample_rate > 0.0, "waveform sample_rate must be positive");
    detail::require(!samples.empty(), "waveform must contain at least one sample");
  }

  std::size_t size() const noexcept { return samples.size(); }
  double dt() const noexcept { return 1.0 / sample_rate; }
};

/// Only tx -> channel -> rx is allowed for the signal path.
inline bool is_forward_transition(Origin from, Origin to) {
  return (from == Origin::tx && to == Origin::channel) || (from == Origin::channel && to == Origin::rx);
}

inline double mean_power(const CVector& x) {
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

/// Variance per quadrature (average of var(re) and var(im)).
inline double quadrature_variance(const CVector& x) {
  if (x.size() < 2) return 0.0;
  cplx mean{};
  for (const auto& v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v - mean);
  return acc / (2.0 * static_cast<double>(x.size() - 1));
}

}  // namespace cvqkd
