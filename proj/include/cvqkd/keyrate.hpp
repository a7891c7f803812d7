#pragma once

// Secret key rate of discrete-modulated and Gaussian-modulated CV-QKD with a
// trusted heterodyne receiver, reverse reconciliation, collective attacks.
//
// All variances are in shot-noise units (vacuum = 1). V_M is the modulation
// variance of one quadrature, V = V_M + 1, and the excess noise eps is referred
// to the channel input.
//
// Correlation bound for discrete alphabets
// ----------------------------------------
// Alice's average state is tau = sum_k p_k |alpha_k><alpha_k| with mean photon
// number n = V_M/2. In the entanglement-based picture (canonical purification of
// tau) the correlation <a b> is Tr[B' tau^1/2 a^dag tau^1/2] with B' the
// Heisenberg-picture image of Bob's annihilation operator, while the observable
// prepare-and-measure quantity is Tr[B' tau a^dag] = sum_k p_k alpha_k^* <b>_k.
// Writing both as Hilbert-Schmidt products with tau^1/2 B'^dag and projecting
// a^dag tau^1/2 on tau^1/2 a^dag gives
//
//   <a b> >= (c1 / n) Re(obs) - sqrt( w (n_B - |obs|^2 / n) ),
//   c1 = Tr[tau^1/2 a tau^1/2 a^dag],   w = n + 1 - c1^2 / n,
//
// where n_B = <b^dag b> and Kadison-Schwarz bounds ||tau^1/2 B'^dag||^2 by n_B.
// For the linear channel obs = sqrt(T) n and n_B = T n + T eps / 2, so
//
//   Z* = 2 sqrt(T) c1 - 2 sqrt(w T eps / 2).
//
// For a thermal tau (Gaussian modulation) c1 = sqrt(n (n + 1)), w = 0 and Z*
// reduces to sqrt(T (V^2 - 1)).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cvqkd/constellation.hpp"
#include "cvqkd/error.hpp"
#include "cvqkd/estimation.hpp"
#include "cvqkd/params.hpp"

namespace cvqkd {

inline constexpr double kBonaFideTolerance = 1e-9;

/// Moments of Alice's average state that enter the correlation bound.
struct ConstellationMoments {
  double mean_photon = 0.0;  // n
  double c1 = 0.0;           // Tr[tau^1/2 a tau^1/2 a^dag]
  double w = 0.0;            // n + 1 - c1^2 / n
  int fock_dim = 0;
};

namespace detail {

inline int fock_dimension_for(const Constellation& c) {
  double max_n = 0.0;
  for (const auto& a : c.points()) max_n = std::max(max_n, std::norm(a));
  const double d = max_n + 12.0 * std::sqrt(max_n) + 30.0;
  return static_cast<int>(std::ceil(std::max(40.0, d)));
}

}  // namespace detail

/// Computes tau in a truncated Fock basis and its square root by
/// diagonalisation; tau has rank M, so no inverse is ever taken.
inline ConstellationMoments constellation_moments(const Constellation& c, int fock_dim = 0) {
  int nonzero = 0;
  for (double p : c.probs())
    if (p > 0.0) ++nonzero;
  detail::require(nonzero >= 2, "correlation bound: degenerate constellation (needs at least two points)");
  const double n = c.mean_photon_number();
  detail::require(n > 0.0, "correlation bound: zero mean photon number");

  const int dim = fock_dim > 0 ? fock_dim : detail::fock_dimension_for(c);
  std::vector<double> log_fact(static_cast<std::size_t>(dim));
  for (int m = 0; m < dim; ++m) log_fact[static_cast<std::size_t>(m)] = std::lgamma(m + 1.0);

  Eigen::MatrixXcd tau = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd v(dim);
  for (std::size_t k = 0; k < c.points().size(); ++k) {
    const double p = c.probs()[k];
    if (p <= 0.0) continue;
    const cplx alpha = c.points()[k];
    const double r = std::abs(alpha);
    const double phi = std::arg(alpha);
    for (int m = 0; m < dim; ++m) {
      // <m|alpha> = exp(-|alpha|^2/2) alpha^m / sqrt(m!)
      const double mag = r > 0.0 ? std::exp(-0.5 * r * r + m * std::log(r) - 0.5 * log_fact[static_cast<std::size_t>(m)])
                                 : (m == 0 ? 1.0 : 0.0);
      v(m) = std::polar(mag, m * phi);
    }
    tau.noalias() += p * v * v.adjoint();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(tau);
  // Roundoff-level eigenvalues of a low-rank tau would otherwise leak into the root.
  const double floor = 1e-13 * es.eigenvalues().maxCoeff();
  Eigen::VectorXd ev = es.eigenvalues().unaryExpr([floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
  const Eigen::MatrixXcd& u = es.eigenvectors();
  const Eigen::MatrixXcd sqrt_tau = u * ev.asDiagonal() * u.adjoint();

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
  for (int m = 1; m < dim; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));

  const Eigen::MatrixXcd left = a * sqrt_tau;
  const Eigen::MatrixXcd right = a.adjoint() * sqrt_tau;
  const double c1 = (left * right).trace().real();

  ConstellationMoments mo;
  mo.mean_photon = n;
  mo.c1 = c1;
  mo.w = std::max(0.0, n + 1.0 - c1 * c1 / n);
  mo.fock_dim = dim;
  return mo;
}

/// Lower bound on the correlation term Z for a discrete alphabet sent through a
/// channel of transmittance T and excess noise eps (channel input).
inline double dm_correlation_bound(const ConstellationMoments& mo, double transmittance, double eps) {
  detail::require(transmittance >= 0.0 && transmittance <= 1.0, "transmittance must lie in [0, 1]");
  detail::require(eps >= 0.0, "excess noise must be >= 0");
  const double z = 2.0 * std::sqrt(transmittance) * mo.c1 - 2.0 * std::sqrt(mo.w * transmittance * eps / 2.0);
  return std::max(0.0, z);
}

inline double dm_correlation_bound(const Constellation& c, double transmittance, double eps) {
  return dm_correlation_bound(constellation_moments(c), transmittance, eps);
}

/// Z for Gaussian modulation, sqrt(T (V^2 - 1)).
inline double gaussian_correlation(double v_mod, double transmittance) {
  const double v = v_mod + 1.0;
  return std::sqrt(transmittance * (v * v - 1.0));
}

// ---------------------------------------------------------------------------
// Gaussian-state machinery

/// Symplectic eigenvalues (ascending) of a 2n x 2n covariance matrix in
/// (x1, p1, x2, p2, ...) ordering, from the spectrum of |i Omega Gamma|.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& gamma) {
  detail::require(gamma.rows() == gamma.cols() && gamma.rows() % 2 == 0, "covariance matrix must be 2n x 2n");
  const Eigen::Index dim = gamma.rows();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  const Eigen::MatrixXcd m = std::complex<double>(0.0, 1.0) * (omega * gamma).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> mags;
  mags.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k) mags.push_back(std::abs(es.eigenvalues()(k)));
  std::sort(mags.begin(), mags.end());
  std::vector<double> out;
  for (std::size_t k = 0; k < mags.size(); k += 2) out.push_back(0.5 * (mags[k] + mags[k + 1]));
  return out;
}

/// G(x) = (x+1) log2(x+1) - x log2(x); von Neumann entropy of a thermal state with mean x.
inline double g_entropy(double x) {
  if (x <= 0.0) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

/// Entropy of a Gaussian state from its symplectic eigenvalues.
inline double gaussian_entropy(const std::vector<double>& symplectic) {
  double s = 0.0;
  for (double nu : symplectic) s += g_entropy((nu - 1.0) / 2.0);
  return s;
}

inline void check_bona_fide(const std::vector<double>& symplectic, const char* what) {
  for (double nu : symplectic)
    if (nu < 1.0 - kBonaFideTolerance) throw NotBonaFide(std::string(what) + ": symplectic eigenvalue below 1");
}

struct CovarianceModel {
  Eigen::Matrix4d gamma_ab;
  double V = 0.0;
  double Z = 0.0;
  double V_B = 0.0;
};

/// Gamma_AB = [[V I, Z sz], [Z sz, V_B I]] with V = V_M + 1 and V_B = T (V - 1) + 1 + T eps.
inline CovarianceModel covariance_matrix(double v_mod, double transmittance, double eps, double z) {
  detail::require(v_mod >= 0.0 && std::isfinite(v_mod), "modulation variance must be >= 0");
  detail::require(transmittance >= 0.0 && transmittance <= 1.0, "transmittance must lie in [0, 1]");
  detail::require(eps >= 0.0 && std::isfinite(eps), "excess noise must be >= 0");
  CovarianceModel cm;
  cm.V = v_mod + 1.0;
  cm.Z = z;
  cm.V_B = transmittance * (cm.V - 1.0) + 1.0 + transmittance * eps;
  cm.gamma_ab.setZero();
  cm.gamma_ab(0, 0) = cm.gamma_ab(1, 1) = cm.V;
  cm.gamma_ab(2, 2) = cm.gamma_ab(3, 3) = cm.V_B;
  cm.gamma_ab(0, 2) = cm.gamma_ab(2, 0) = z;
  cm.gamma_ab(1, 3) = cm.gamma_ab(3, 1) = -z;
  check_bona_fide(symplectic_eigenvalues(cm.gamma_ab), "covariance_matrix");
  return cm;
}

/// Heterodyne mutual information, log2(1 + SNR), SNR = eta T V_M / (2 + eta T eps + 2 v_el).
inline double mutual_information(double v_mod, double transmittance, double eps, const DetectorParams& det) {
  const double snr = det.efficiency * transmittance * v_mod /
                     (2.0 + det.efficiency * transmittance * eps + 2.0 * det.v_el);
  return std::log2(1.0 + snr);
}

/// Holevo bound on Eve's information about Bob's heterodyne data with a trusted
/// detector: beamsplitter of transmissivity eta mixing Bob's mode with one arm
/// of an EPR pair of variance v = 1 + 2 v_el / (1 - eta).
inline double holevo_bound(const CovarianceModel& cm, const DetectorParams& det) {
  det.validate();
  const double eta = det.efficiency;
  double v_th = 1.0;
  if (det.v_el > 0.0) {
    detail::require(eta < 1.0, "trusted-noise model needs eta < 1 when v_el > 0");
    v_th = 1.0 + 2.0 * det.v_el / (1.0 - eta);
  }

  const auto s_ab = symplectic_eigenvalues(cm.gamma_ab);
  check_bona_fide(s_ab, "holevo_bound(AB)");

  // Modes: A(0,1) B(2,3) F0(4,5) G(6,7).
  Eigen::Matrix<double, 8, 8> g = Eigen::Matrix<double, 8, 8>::Zero();
  g.topLeftCorner<4, 4>() = cm.gamma_ab;
  const double cth = std::sqrt(std::max(0.0, v_th * v_th - 1.0));
  g(4, 4) = g(5, 5) = g(6, 6) = g(7, 7) = v_th;
  g(4, 6) = g(6, 4) = cth;
  g(5, 7) = g(7, 5) = -cth;

  Eigen::Matrix<double, 8, 8> bs = Eigen::Matrix<double, 8, 8>::Identity();
  const double st = std::sqrt(eta), ct = std::sqrt(1.0 - eta);
  for (int q = 0; q < 2; ++q) {
    bs(2 + q, 2 + q) = st;
    bs(2 + q, 4 + q) = ct;
    bs(4 + q, 2 + q) = -ct;
    bs(4 + q, 4 + q) = st;
  }
  const Eigen::Matrix<double, 8, 8> gd = bs * g * bs.transpose();

  // Condition (A, F', G) on a heterodyne measurement of B'.
  const int rest[6] = {0, 1, 4, 5, 6, 7};
  Eigen::Matrix<double, 6, 6> gr;
  Eigen::Matrix<double, 6, 2> cross;
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) gr(i, j) = gd(rest[i], rest[j]);
    cross(i, 0) = gd(rest[i], 2);
    cross(i, 1) = gd(rest[i], 3);
  }
  const Eigen::Matrix2d gb = gd.block<2, 2>(2, 2) + Eigen::Matrix2d::Identity();
  const Eigen::Matrix<double, 6, 6> cond = gr - cross * gb.inverse() * cross.transpose();
  const auto s_cond = symplectic_eigenvalues(cond);
  check_bona_fide(s_cond, "holevo_bound(conditional)");

  return std::max(0.0, gaussian_entropy(s_ab) - gaussian_entropy(s_cond));
}

// ---------------------------------------------------------------------------
// Reports

/// Channel-level inputs of a key-rate evaluation.
struct LinkParams {
  double v_mod = 1.0;
  double transmittance = 1.0;
  double eps = 0.0;
};

struct KeyRateReport {
  // inputs
  int M = 0;  // 0 for Gaussian modulation
  double nu = 0.0;
  double symbol_rate = 0.0;  // symbols/s
  double distance_km = 0.0;
  double v_mod = 0.0;
  double transmittance = 0.0;
  double v_el = 0.0;
  double eps = 0.0;
  double eta = 0.0;
  double beta = 0.95;
  std::size_t block_N = 0;

  // outputs
  double Z = 0.0;
  double I_AB = 0.0;
  double chi_E = 0.0;
  double R_inf_raw = 0.0;
  double R_inf = 0.0;
  double skr_bps = 0.0;

  bool has_finite = false;
  double T_low = 0.0;
  double eps_up = 0.0;
  double R_finite_raw = 0.0;
  double R_finite = 0.0;
  double skr_finite_bps = 0.0;

  std::optional<Constellation> constellation;  // nullopt for Gaussian modulation
};

namespace detail {

struct RateTerms {
  double z, i_ab, chi;
};

inline RateTerms rate_terms(double z, const LinkParams& link, const DetectorParams& det) {
  const CovarianceModel cm = covariance_matrix(link.v_mod, link.transmittance, link.eps, z);
  return {z, mutual_information(link.v_mod, link.transmittance, link.eps, det), holevo_bound(cm, det)};
}

inline void fill_asymptotic(KeyRateReport& r, const RateTerms& t, double beta, double symbol_rate) {
  r.Z = t.z;
  r.I_AB = t.i_ab;
  r.chi_E = t.chi;
  r.R_inf_raw = beta * t.i_ab - t.chi;
  r.R_inf = std::max(0.0, r.R_inf_raw);
  r.skr_bps = symbol_rate * r.R_inf;
}

inline void echo_inputs(KeyRateReport& r, const LinkParams& link, const DetectorParams& det, double beta,
                        double symbol_rate) {
  r.v_mod = link.v_mod;
  r.transmittance = link.transmittance;
  r.eps = link.eps;
  r.v_el = det.v_el;
  r.eta = det.efficiency;
  r.beta = beta;
  r.symbol_rate = symbol_rate;
}

}  // namespace detail

/// As below, with the constellation moments precomputed (they depend on the
/// alphabet only, so sweeps over the channel can reuse them).
inline KeyRateReport asymptotic_rate(const Constellation& c, const ConstellationMoments& mo, const LinkParams& link,
                                     const DetectorParams& det, double beta, double symbol_rate = 0.0) {
  detail::require(beta >= 0.0 && beta <= 1.0, "reconciliation efficiency must lie in [0, 1]");
  LinkParams l = link;
  l.v_mod = c.v_mod();
  KeyRateReport r;
  detail::echo_inputs(r, l, det, beta, symbol_rate);
  r.M = c.cardinality();
  r.nu = c.nu();
  r.constellation = c;
  const double z = dm_correlation_bound(mo, l.transmittance, l.eps);
  detail::fill_asymptotic(r, detail::rate_terms(z, l, det), beta, symbol_rate);
  return r;
}

/// R_inf = beta I_AB - chi_E for a discrete alphabet. The constellation's own
/// variance is used as V_M.
inline KeyRateReport asymptotic_rate(const Constellation& c, const LinkParams& link, const DetectorParams& det,
                                     double beta, double symbol_rate = 0.0) {
  return asymptotic_rate(c, constellation_moments(c), link, det, beta, symbol_rate);
}

/// Same chain with the Gaussian-modulation correlation.
inline KeyRateReport gg02_rate(const LinkParams& link, const DetectorParams& det, double beta,
                               double symbol_rate = 0.0) {
  detail::require(beta >= 0.0 && beta <= 1.0, "reconciliation efficiency must lie in [0, 1]");
  KeyRateReport r;
  detail::echo_inputs(r, link, det, beta, symbol_rate);
  const double z = gaussian_correlation(link.v_mod, link.transmittance);
  detail::fill_asymptotic(r, detail::rate_terms(z, link, det), beta, symbol_rate);
  return r;
}

/// Pessimistic rate at (T_low, eps_up); everything else as in `report`.
inline KeyRateReport finite_rate(KeyRateReport report, const EstimatedParams& est) {
  detail::require(est.has_bounds, "finite_rate: worst-case bounds not populated");
  DetectorParams det;
  det.efficiency = report.eta;
  det.v_el = report.v_el;
  LinkParams worst{report.v_mod, est.T_low, est.eps_up};
  const double z = report.constellation
                       ? dm_correlation_bound(constellation_moments(*report.constellation), worst.transmittance, worst.eps)
                       : gaussian_correlation(worst.v_mod, worst.transmittance);
  const auto t = detail::rate_terms(z, worst, det);
  report.has_finite = true;
  report.block_N = est.block_N;
  report.T_low = est.T_low;
  report.eps_up = est.eps_up;
  report.R_finite_raw = report.beta * t.i_ab - t.chi;
  report.R_finite = std::max(0.0, report.R_finite_raw);
  report.skr_finite_bps = report.symbol_rate * report.R_finite;
  return report;
}

// ---------------------------------------------------------------------------
// Shaping optimisation

struct NuSearchConfig {
  double nu_min = 1e-3;
  double nu_max = 1.0;
  int grid_points = 41;      // coarse scan before golden-section refinement
  double tolerance = 1e-4;   // bracket width at which golden-section stops
};

struct NuOptimum {
  double nu = 0.0;
  double rate = 0.0;  // raw asymptotic rate at nu
};

/// Maximises the asymptotic DM rate over nu for fixed (M, V_M). Returns
/// nullopt when the rate is non-positive everywhere in the search range.
inline std::optional<NuOptimum> optimize_nu(int m, double v_mod, const LinkParams& link, const DetectorParams& det,
                                            double beta, const NuSearchConfig& cfg = {}) {
  detail::require(cfg.nu_min > 0.0 && cfg.nu_max > cfg.nu_min && cfg.grid_points >= 3, "invalid nu search range");
  auto rate = [&](double nu) {
    return asymptotic_rate(build_constellation(m, nu, v_mod), link, det, beta).R_inf_raw;
  };

  // Coarse scan on a log grid, then golden-section inside the best bracket.
  std::vector<double> xs(static_cast<std::size_t>(cfg.grid_points)), ys(xs.size());
  const double lmin = std::log(cfg.nu_min), lmax = std::log(cfg.nu_max);
  std::size_t best = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = std::exp(lmin + (lmax - lmin) * static_cast<double>(i) / static_cast<double>(xs.size() - 1));
    ys[i] = rate(xs[i]);
    if (ys[i] > ys[best]) best = i;
  }
  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[std::min(best + 1, xs.size() - 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = rate(c), fd = rate(d);
  while (b - a > cfg.tolerance) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = rate(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = rate(d);
    }
  }
  NuOptimum opt{0.5 * (a + b), 0.0};
  opt.rate = rate(opt.nu);
  if (ys[best] > opt.rate) opt = {xs[best], ys[best]};
  if (!(opt.rate > 0.0)) return std::nullopt;
  return opt;
}

}  // namespace cvqkd
