#pragma once

// Probabilistically shaped square QAM alphabets of coherent-state amplitudes.
//
// Points live on the odd-integer grid {±1, ±3, ...}^2. Probabilities follow a
// Maxwell-Boltzmann law exp(-nu |g|^2) over the *unscaled* grid, and the grid is
// then scaled so that sum_k p_k |alpha_k|^2 = V_M / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/random.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

class Constellation {
public:
  Constellation() = default;

  int cardinality() const noexcept { return static_cast<int>(points_.size()); }
  const CVector& points() const noexcept { return points_; }
  const RVector& probs() const noexcept { return probs_; }
  double nu() const noexcept { return nu_; }
  double v_mod() const noexcept { return v_mod_; }
  /// Amplitude scale applied to the unscaled odd-integer grid.
  double grid_scale() const noexcept { return scale_; }

  /// sum_k p_k |alpha_k|^2, i.e. the mean photon number.
  double mean_photon_number() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < points_.size(); ++k) acc += probs_[k] * std::norm(points_[k]);
    return acc;
  }

  /// Probability of an arbitrary amplitude; zero for anything outside the alphabet
  /// (e.g. the removed 32-QAM corners).
  double probability_of(cplx alpha, double tol = 1e-12) const {
    for (std::size_t k = 0; k < points_.size(); ++k)
      if (std::abs(points_[k] - alpha) <= tol * std::max(1.0, scale_)) return probs_[k];
    return 0.0;
  }

  /// Same alphabet with every amplitude multiplied by exp(i phi).
  Constellation rotated(double phi) const {
    Constellation c = *this;
    const cplx r = std::polar(1.0, phi);
    for (auto& p : c.points_) p *= r;
    return c;
  }

  friend Constellation build_constellation(int m, double nu, double v_mod_target);
  friend Constellation make_constellation(CVector points, RVector probs, double nu);

private:
  CVector points_;
  RVector probs_;
  double nu_ = 0.0;
  double v_mod_ = 0.0;
  double scale_ = 1.0;
};

/// Grid side length for a supported cardinality (16 -> 4, 32 -> 6, 64 -> 8).
inline int grid_side(int m) {
  switch (m) {
    case 16: return 4;
    case 32: return 6;
    case 64: return 8;
    default: throw InvalidArgument("unsupported constellation cardinality " + std::to_string(m));
  }
}

/// Unscaled grid points for M-QAM; for M = 32 the four outer corners are left out.
inline CVector qam_grid(int m) {
  const int side = grid_side(m);
  const int outer = side - 1;
  CVector g;
  g.reserve(static_cast<std::size_t>(m));
  for (int ix = -outer; ix <= outer; ix += 2) {
    for (int iy = -outer; iy <= outer; iy += 2) {
      if (m == 32 && std::abs(ix) == outer && std::abs(iy) == outer) continue;
      g.emplace_back(ix, iy);
    }
  }
  return g;
}

inline Constellation build_constellation(int m, double nu, double v_mod_target) {
  detail::require(std::isfinite(nu) && nu > 0.0, "shaping parameter nu must be > 0");
  detail::require(std::isfinite(v_mod_target) && v_mod_target > 0.0, "target modulation variance must be finite and > 0");
  const CVector grid = qam_grid(m);

  // Normalise in log space relative to the innermost energy so tiny nu and large
  // grids do not underflow.
  double e_min = INFINITY;
  for (const auto& g : grid) e_min = std::min(e_min, std::norm(g));
  RVector p(grid.size());
  double z = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    p[k] = std::exp(-nu * (std::norm(grid[k]) - e_min));
    z += p[k];
  }
  double unscaled_energy = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    p[k] /= z;
    unscaled_energy += p[k] * std::norm(grid[k]);
  }

  Constellation c;
  c.scale_ = std::sqrt(0.5 * v_mod_target / unscaled_energy);
  c.points_.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) c.points_[k] = c.scale_ * grid[k];
  c.probs_ = std::move(p);
  c.nu_ = nu;
  c.v_mod_ = 2.0 * c.mean_photon_number();
  return c;
}

/// Arbitrary alphabet, used by tests and by the key-rate engine for
/// Gaussian-limit checks. Probabilities are renormalised.
inline Constellation make_constellation(CVector points, RVector probs, double nu = 0.0) {
  detail::require(!points.empty() && points.size() == probs.size(), "points/probs size mismatch");
  double z = 0.0;
  for (double v : probs) {
    detail::require(v >= 0.0 && std::isfinite(v), "probabilities must be finite and non-negative");
    z += v;
  }
  detail::require(z > 0.0, "probabilities sum to zero");
  Constellation c;
  c.points_ = std::move(points);
  c.probs_ = std::move(probs);
  for (auto& v : c.probs_) v /= z;
  c.nu_ = nu;
  c.v_mod_ = 2.0 * c.mean_photon_number();
  c.scale_ = 1.0;
  return c;
}

/// Shannon entropy of the point distribution in bits.
inline double entropy_bits(const Constellation& c) {
  double h = 0.0;
  for (double p : c.probs())
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

/// Plain-text table: one line per point, `index re im p`, preceded by '#' comments.
inline void write_constellation_table(std::ostream& os, const Constellation& c) {
  os << "# M=" << c.cardinality() << " nu=" << c.nu() << " v_mod=" << c.v_mod() << "\n";
  os << "# index re_alpha im_alpha probability\n";
  os << std::setprecision(17);
  for (std::size_t k = 0; k < c.points().size(); ++k)
    os << k << ' ' << c.points()[k].real() << ' ' << c.points()[k].imag() << ' ' << c.probs()[k] << '\n';
}

inline std::string constellation_table(const Constellation& c) {
  std::ostringstream os;
  write_constellation_table(os, c);
  return os.str();
}

/// i.i.d. draws from a constellation, reproducible from (constellation, n, seed).
struct SymbolStream {
  CVector symbols;          // sqrt(SNU) amplitudes
  std::vector<std::uint32_t> indices;  // index into Constellation::points()
  double rate = 0.0;        // symbols/s
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return symbols.size(); }
};

inline SymbolStream sample_symbols(const Constellation& c, std::size_t n, std::uint64_t seed, double rate = 0.0) {
  detail::require(n >= 1, "sample_symbols: n must be >= 1");
  detail::require(c.cardinality() >= 1, "sample_symbols: empty constellation");
  RVector cdf(c.probs().size());
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) cdf[k] = (acc += c.probs()[k]);
  cdf.back() = 1.0;

  Rng rng(seed);
  SymbolStream s;
  s.rate = rate;
  s.seed = seed;
  s.symbols.resize(n);
  s.indices.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    // First bin with cdf > u; zero-probability points have empty bins and are never drawn.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    s.indices[i] = static_cast<std::uint32_t>(k);
    s.symbols[i] = c.points()[k];
  }
  return s;
}

}  // namespace cvqkd
