#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cvqkd/constellation.hpp"
#include "cvqkd/dsp.hpp"
#include "cvqkd/fft.hpp"
#include "cvqkd/rxdsp.hpp"
#include "cvqkd/spectral.hpp"
#include "cvqkd/txdsp.hpp"

using namespace cvqkd;

namespace {

constexpr double kPi = std::numbers::pi;

// RRC pulse by numerical inverse Fourier transform of the square-root raised-cosine
// spectrum (unit energy, symbol period 1). Independent of the closed form.
double rrc_by_integration(double t, double b) {
  const double f1 = (1.0 - b) / 2.0, f2 = (1.0 + b) / 2.0;
  auto spectrum = [&](double f) {
    if (f <= f1) return 1.0;
    if (f >= f2) return 0.0;
    return std::sqrt(0.5 * (1.0 + std::cos(kPi / b * (f - f1))));
  };
  // 2 * integral_0^f2 S(f) cos(2 pi f t) df, composite Simpson
  const int n = 20000;
  const double h = f2 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double f = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * spectrum(f) * std::cos(2.0 * kPi * f * t);
  }
  return 2.0 * acc * h / 3.0;
}

CVector random_symbols(std::size_t n, std::uint64_t seed) {
  const auto c = build_constellation(64, 0.129, 1.0);
  return sample_symbols(c, n, seed).symbols;
}

SymbolStream stream(CVector s, double rate) {
  SymbolStream st;
  st.symbols = std::move(s);
  st.rate = rate;
  return st;
}

TxConfig bare_config(double rate) {
  TxConfig c = TxConfig::for_symbol_rate(rate);
  c.simulate_tx_response = false;
  c.pilot_amp_ratio = 0.0;
  return c;
}

double nmse(const CVector& a, const CVector& ref) {
  double e = 0.0, p = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += std::norm(a[i] - ref[i]);
    p += std::norm(ref[i]);
  }
  return e / p;
}

}  // namespace

TEST(Rrc, ClosedFormMatchesSpectralDefinition) {
  for (double b : {0.2, 0.5, 1.0}) {
    for (double t : {0.0, 0.1, 0.37, 0.5, 1.0, 1.0 / (4.0 * b), 1.7, 3.25, 7.9}) {
      EXPECT_NEAR(rrc_pulse(t, b), rrc_by_integration(t, b), 2e-6) << "b=" << b << " t=" << t;
      EXPECT_DOUBLE_EQ(rrc_pulse(t, b), rrc_pulse(-t, b));
    }
  }
}

TEST(Rrc, TapsUnitEnergy) {
  for (double sps : {4.0, 3.2, 2.5, 10.0}) {
    const auto h = rrc_taps(0.2, 32, sps);
    double e = 0.0;
    for (double v : h) e += v * v;
    EXPECT_NEAR(e, 1.0, 1e-9);
    EXPECT_EQ(h.size() % 2, 1u);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
  }
}

TEST(Rrc, ZeroIsiAtIntegerRate) {
  const auto h = rrc_taps(0.2, 32, 4);
  const std::size_t n = h.size();
  RVector g(2 * n - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i + j] += h[i] * h[j];
  const std::size_t c = n - 1;
  EXPECT_NEAR(g[c], 1.0, 1e-9);
  double worst = 0.0;
  for (std::size_t k = 4; k <= c; k += 4) worst = std::max({worst, std::abs(g[c + k]), std::abs(g[c - k])});
  EXPECT_LT(worst, 1e-3);
}

TEST(Rrc, ArgumentChecks) {
  EXPECT_THROW(rrc_taps(0.0, 32, 4), InvalidArgument);
  EXPECT_THROW(rrc_taps(1.2, 32, 4), InvalidArgument);
  EXPECT_THROW(rrc_taps(0.2, 6, 4), InvalidArgument);
  EXPECT_THROW(rrc_taps(0.2, 33, 4), InvalidArgument);
  EXPECT_THROW(rrc_taps(0.2, 32, 1.5), InvalidArgument);
}

TEST(Rrc, FractionalRateMatchesDirectConvolutionOracle) {
  // 32 GS/s at 10 GBd: shape at 160 GS/s (16 samples per symbol, plain
  // zero-stuffing and direct convolution), keep every 5th sample.
  const double s = 10e9, fs = 32e9;
  const CVector sym = random_symbols(200, 5);
  const int span = 32;
  const std::int64_t lead = shaping_lead(0.2, span, s, fs);
  const std::size_t n_out = static_cast<std::size_t>(std::ceil(200 * 3.2)) + 2 * lead;
  const CVector poly = shape_symbols(sym, s, fs, 0.2, span, lead, n_out);

  const int up = 16;
  const int half = span / 2 * up;
  RVector taps(2 * half + 1);
  for (int j = -half; j <= half; ++j) taps[j + half] = rrc_by_integration(static_cast<double>(j) / up, 0.2);
  const std::size_t n_fine = 5 * n_out;
  CVector fine(n_fine);
  for (std::size_t k = 0; k < sym.size(); ++k) {
    const auto centre = static_cast<std::int64_t>(5 * lead + 16 * k);
    for (int j = -half; j <= half; ++j) {
      const std::int64_t m = centre + j;
      if (m >= 0 && m < static_cast<std::int64_t>(n_fine)) fine[m] += sym[k] * taps[j + half];
    }
  }
  double worst = 0.0;
  for (std::size_t m = 0; m < n_out; ++m) worst = std::max(worst, std::abs(poly[m] - fine[5 * m]));
  EXPECT_LT(worst, 1e-5);
}

TEST(Rrc, FractionalRateIsiFree) {
  // One symbol shaped at 3.2 samples per symbol, matched-filtered with the
  // polyphase branch for each symbol instant's fractional phase.
  CVector sym(101, 0.0);
  sym[50] = 1.0;
  const Waveform w = upsample_shape(stream(sym, 10e9), bare_config(10e9));
  const double lead = static_cast<double>(shaping_lead(0.2, 32, 10e9, 32e9));
  const double sps = 3.2;
  RVector out(101);
  for (std::size_t k = 0; k < 101; ++k) {
    const double pos = lead + static_cast<double>(k) * sps;
    const auto i0 = static_cast<std::ptrdiff_t>(std::floor(pos));
    const auto h = rrc_polyphase_taps(0.2, 32, sps, pos - static_cast<double>(i0));
    const auto centre = static_cast<std::ptrdiff_t>(h.size() / 2);
    cplx acc{};
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(h.size()); ++n) {
      const std::ptrdiff_t m = i0 - (n - centre);
      if (m >= 0 && m < static_cast<std::ptrdiff_t>(w.size())) acc += h[n] * w.samples[m];
    }
    out[k] = std::abs(acc);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < 101; ++k)
    if (k != 50) worst = std::max(worst, out[k] / out[50]);
  EXPECT_LT(worst, 1e-3);
}

TEST(Rrc, ReceiverRateCubicTimingIsiFree) {
  // At the 80 GS/s receiver rate the cubic interpolator of the matched filter
  // keeps the cascade ISI-free for off-grid symbol instants. The waveform is
  // advanced by 0.4 samples through a 10x band-limited resample.
  for (double s : {8e9, 10e9}) {
    CVector sym(101, 0.0);
    sym[50] = 1.0;
    auto cfg = bare_config(s);
    cfg.dac_rate = 80e9;
    const Waveform w = upsample_shape(stream(sym, s), cfg);
    const CVector fine = RationalResampler(80e9, 800e9).process(w.samples);
    CVector adv(w.size() - 1);
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = fine[10 * i + 4];
    RxConfig rx;
    rx.symbol_rate = s;
    rx.adc_rate = 80e9;
    const SyncResult sync{shaping_lead(0.2, 32, s, 80e9) - 1, 0.6, 0.0};
    const auto r = matched_filter_downsample(Waveform{adv, 80e9, Origin::rx}, sync, 101, rx);
    const double peak = std::abs(r.symbols[50]);
    double worst = 0.0;
    for (std::size_t k = 0; k < 101; ++k)
      if (k != 50) worst = std::max(worst, std::abs(r.symbols[k]) / peak);
    EXPECT_LT(worst, 1e-3) << "s=" << s;
  }
}

TEST(RationalRatio, ContinuedFractions) {
  EXPECT_EQ(rational_ratio(3.2).p, 16);
  EXPECT_EQ(rational_ratio(3.2).q, 5);
  EXPECT_EQ(rational_ratio(4.0).p, 4);
  EXPECT_EQ(rational_ratio(4.0).q, 1);
  EXPECT_EQ(rational_ratio(2.5).p, 5);
  EXPECT_EQ(rational_ratio(2.5).q, 2);
  EXPECT_THROW(rational_ratio(kPi), InvalidArgument);
}

TEST(UpsampleShape, ImpulseResponse) {
  CVector sym(64, 0.0);
  sym[32] = 1.0;
  auto cfg = bare_config(8e9);  // 4 samples per symbol
  const Waveform w = upsample_shape(stream(sym, 8e9), cfg);
  const auto lead = shaping_lead(0.2, 32, 8e9, 32e9);
  ASSERT_EQ(w.size(), static_cast<std::size_t>(64 * 4 + 2 * lead));
  EXPECT_EQ(w.origin, Origin::tx);
  EXPECT_DOUBLE_EQ(w.sample_rate, 32e9);
  const std::size_t centre = static_cast<std::size_t>(lead) + 32 * 4;
  std::size_t argmax = 0;
  for (std::size_t m = 0; m < w.size(); ++m)
    if (std::abs(w.samples[m]) > std::abs(w.samples[argmax])) argmax = m;
  EXPECT_EQ(argmax, centre);
  const double scale = std::sqrt(8e9 * 1e-9);
  for (std::size_t m = 0; m < w.size(); ++m) {
    const double t = (static_cast<double>(m) - static_cast<double>(centre)) / 4.0;
    const double want = std::abs(t) <= 16.0 ? scale * rrc_by_integration(t, 0.2) : 0.0;
    EXPECT_NEAR(w.samples[m].real(), want, 1e-5);
    EXPECT_EQ(w.samples[m].imag(), 0.0);
  }
}

TEST(UpsampleShape, ZeroSymbolsGiveZeroWaveform) {
  const Waveform w = upsample_shape(stream(CVector(500, 0.0), 10e9), bare_config(10e9));
  for (const auto& v : w.samples) EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(UpsampleShape, LengthBookkeeping) {
  for (std::size_t n : {1u, 7u, 100u, 1001u}) {
    const Waveform w = upsample_shape(stream(random_symbols(n, 1), 10e9), bare_config(10e9));
    const auto lead = shaping_lead(0.2, 32, 10e9, 32e9);
    EXPECT_EQ(lead, 52);  // ceil(16 * 3.2)
    EXPECT_EQ(w.size(), static_cast<std::size_t>(std::ceil(n * 3.2 - 1e-9)) + 2 * lead);
  }
}

TEST(UpsampleShape, Errors) {
  EXPECT_THROW(upsample_shape(stream({}, 10e9), bare_config(10e9)), InvalidArgument);
  auto cfg = bare_config(10e9);
  cfg.symbol_rate = 32e9 / kPi;
  EXPECT_THROW(upsample_shape(stream(random_symbols(10, 1), cfg.symbol_rate), cfg), InvalidArgument);
  EXPECT_THROW(upsample_shape(stream(random_symbols(10, 1), 8e9), bare_config(10e9)), InvalidArgument);
}

TEST(UpsampleShape, EnergyBookkeeping) {
  for (double s : {8e9, 10e9}) {
    const auto c = build_constellation(64, 0.129, 1.03);
    const auto sym = sample_symbols(c, 200000, 3, s);
    const Waveform w = upsample_shape(sym, bare_config(s));
    const auto lead = static_cast<std::size_t>(shaping_lead(0.2, 32, s, 32e9));
    const CVector body(w.samples.begin() + 2 * lead, w.samples.end() - 2 * lead);
    double v = 0.0;
    for (const auto& a : sym.symbols) v += 2.0 * std::norm(a);
    v /= static_cast<double>(sym.size());
    EXPECT_NEAR(mean_power(body) / expected_tx_power(v, s), 1.0, 0.01);
  }
}

TEST(UpsampleShape, OccupiedBandwidth) {
  // Raised-cosine PSD: -3 dB at +/- s/2, nothing beyond +/- s(1 + b)/2.
  const auto sym = sample_symbols(build_constellation(64, 0.129, 1.0), 400000, 9, 10e9);
  const Waveform w = upsample_shape(sym, bare_config(10e9));
  const Psd psd = welch_psd(w.samples, 2048, w.sample_rate);
  const auto [lo3, hi3] = occupied_band(psd, 3.0);
  EXPECT_NEAR(lo3, -5e9, 0.2e9);
  EXPECT_NEAR(hi3, 5e9, 0.2e9);
  const auto [lo30, hi30] = occupied_band(psd, 30.0);
  EXPECT_NEAR(lo30, -6e9, 0.3e9);
  EXPECT_NEAR(hi30, 6e9, 0.3e9);
  double total = 0.0, inside = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    total += psd.density[k];
    if (std::abs(psd.frequency(k)) <= 6.1e9) inside += psd.density[k];
  }
  EXPECT_GT(inside / total, 0.999);
}

TEST(UpsampleShape, BackToBackRoundTrip) {
  for (double s : {8e9, 10e9}) {
    const auto sym = sample_symbols(build_constellation(64, 0.129, 1.03), 20000, 4, s);
    const Waveform w = upsample_shape(sym, bare_config(s));
    RxConfig rx;
    rx.symbol_rate = s;
    rx.adc_rate = 32e9;
    rx.pilot_search_band = rx.pilot_track_band = 1e9;
    SyncResult sync;
    sync.offset = shaping_lead(0.2, 32, s, 32e9);
    const auto r = matched_filter_downsample(w, sync, sym.size(), rx, std::sqrt(32e9 * 1e-9));
    // the block edges see a truncated neighbourhood; the interior is the round trip
    const CVector got(r.symbols.begin() + 32, r.symbols.end() - 32);
    const CVector want(sym.symbols.begin() + 32, sym.symbols.end() - 32);
    EXPECT_LT(nmse(got, want), 1e-4) << "s=" << s;
  }
}

TEST(UpsampleShape, Linearity) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> n;
  auto cfg = TxConfig::for_symbol_rate(10e9);
  cfg.pilot_amp_ratio = 0.0;
  auto chain = [&](const CVector& s) {
    Waveform w = upsample_shape(stream(s, 10e9), cfg);
    return apply_response(pre_emphasis(w, cfg.tx_response, cfg.preemphasis_floor), cfg.tx_response).samples;
  };
  for (int trial = 0; trial < 5; ++trial) {
    const CVector x = random_symbols(300, 10 + trial), y = random_symbols(300, 20 + trial);
    const cplx a{n(g), n(g)}, b{n(g), n(g)};
    CVector mix(300);
    for (std::size_t i = 0; i < 300; ++i) mix[i] = a * x[i] + b * y[i];
    const CVector lhs = chain(mix), tx = chain(x), ty = chain(y);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      worst = std::max(worst, std::abs(lhs[i] - (a * tx[i] + b * ty[i])));
      scale = std::max(scale, std::abs(lhs[i]));
    }
    EXPECT_LT(worst, 1e-12 * scale + 1e-14);
  }
}

TEST(PreEmphasis, FlatResponseIsBitExact) {
  const Waveform w = upsample_shape(stream(random_symbols(777, 2), 10e9), bare_config(10e9));
  const Waveform out = pre_emphasis(w, FrequencyResponse::flat(), 0.1);
  EXPECT_EQ(out.samples, w.samples);
  EXPECT_EQ(out.sample_rate, w.sample_rate);
}

TEST(PreEmphasis, CascadeFlatOverSignalBand) {
  const Waveform w = upsample_shape(stream(random_symbols(8192, 6), 10e9), bare_config(10e9));
  const auto h = FrequencyResponse::gaussian(8e9);
  const Waveform pre = pre_emphasis(w, h, 0.1);
  const Waveform out = apply_response(pre, h);
  const CVector X = fft(w.samples), P = fft(pre.samples), Y = fft(out.samples);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double f = bin_frequency(k, X.size(), w.sample_rate);
    if (std::abs(f) > 6e9 || std::abs(X[k]) < 1e-6 * std::sqrt(static_cast<double>(X.size()))) continue;
    const double db = 20.0 * std::log10(std::abs(Y[k] / X[k]));
    lo = std::min(lo, db);
    hi = std::max(hi, db);
    // lift of the pre-emphasised spectrum follows 1/|H|
    EXPECT_NEAR(std::abs(P[k] / X[k]), 1.0 / std::abs(h(f)), 1e-9 / std::abs(h(f)));
  }
  EXPECT_LT(hi - lo, 0.5);
  EXPECT_LT(std::max(std::abs(hi), std::abs(lo)), 0.5);
}

TEST(PreEmphasis, HighFrequencyLift) {
  const Waveform w = upsample_shape(stream(random_symbols(8192, 6), 10e9), bare_config(10e9));
  const Waveform pre = pre_emphasis(w, FrequencyResponse::gaussian(8e9), 0.1);
  const Psd a = welch_psd(w.samples, 256, w.sample_rate), b = welch_psd(pre.samples, 256, w.sample_rate);
  auto band_ratio_db = [&](double f_lo, double f_hi) {
    double pa = 0.0, pb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double f = std::abs(a.frequency(k));
      if (f < f_lo || f > f_hi) continue;
      pa += a.density[k];
      pb += b.density[k];
    }
    return 10.0 * std::log10(pb / pa);
  };
  EXPECT_LT(band_ratio_db(0, 1e9), 0.1);
  EXPECT_GT(band_ratio_db(4.5e9, 5.5e9), 1.0);
}

TEST(PreEmphasis, FloorBoundsGain) {
  CVector x(4096, 0.0);
  x[0] = 1.0;  // white spectrum
  const Waveform w{x, 32e9, Origin::tx};
  const auto h = FrequencyResponse::gaussian(2e9);
  const CVector Y = fft(pre_emphasis(w, h, 0.1).samples);
  for (std::size_t k = 0; k < Y.size(); ++k) {
    const double f = bin_frequency(k, Y.size(), 32e9);
    EXPECT_NEAR(std::abs(Y[k]), 1.0 / std::max(std::abs(h(f)), 0.1), 1e-9);
  }
  // a response that underflows to zero in band needs a floor
  const auto steep = FrequencyResponse::gaussian(0.2e9);
  EXPECT_THROW(pre_emphasis(w, steep, 0.0), InvalidArgument);
  EXPECT_NO_THROW(pre_emphasis(w, steep, 0.1));
}

TEST(PreEmphasis, PhaseOfInverse) {
  CVector x(1024, 0.0);
  x[0] = 1.0;
  const Waveform w{x, 32e9, Origin::tx};
  const auto h = FrequencyResponse::butterworth2(6e9);
  const CVector Y = fft(pre_emphasis(w, h, 0.1).samples);
  for (std::size_t k = 0; k < Y.size(); ++k) {
    const double f = bin_frequency(k, Y.size(), 32e9);
    EXPECT_NEAR(std::remainder(std::arg(Y[k]) + std::arg(h(f)), 2 * kPi), 0.0, 1e-9);
  }
}

TEST(AddPilot, PureToneOnZeroWaveform) {
  const std::size_t n = 3200;  // 8 GHz falls on bin 800 at 32 GS/s
  const Waveform w{CVector(n, 0.0), 32e9, Origin::tx};
  const Waveform out = add_pilot(w, 8e9, 0.7);
  const Psd p = periodogram(out.samples, 32e9);
  std::size_t peak = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += p.density[k];
    if (p.density[k] > p.density[peak]) peak = k;
  }
  EXPECT_EQ(peak, 800u);
  EXPECT_NEAR(p.frequency(peak), 8e9, 1.0);
  EXPECT_GT(p.density[peak] / total, 1.0 - 1e-12);
  for (const auto& v : out.samples) EXPECT_NEAR(std::abs(v), 0.7, 1e-12);
}

TEST(AddPilot, ZeroAmplitudeIsIdentity) {
  const Waveform w = upsample_shape(stream(random_symbols(300, 8), 10e9), bare_config(10e9));
  EXPECT_EQ(add_pilot(w, 8e9, 0.0).samples, w.samples);
}

TEST(AddPilot, SignalBandUntouched) {
  const Waveform w = upsample_shape(stream(random_symbols(996, 8), 10e9), bare_config(10e9));
  ASSERT_EQ(w.size(), 3292u);  // 8e9 * 3292 / 32e9 = 823
  const CVector X = fft(w.samples), Y = fft(add_pilot(w, 8e9, 3.0, 6e9).samples);
  for (std::size_t k = 0; k < X.size(); ++k) {
    if (k == 823) {
      EXPECT_NEAR(std::abs(Y[k] - X[k]), 3.0 * 3292, 1e-6);
      continue;
    }
    EXPECT_NEAR(std::abs(Y[k] - X[k]), 0.0, 1e-8);
  }
}

TEST(AddPilot, RejectsPilotInsideBandOrBeyondNyquist) {
  const Waveform w{CVector(100, 0.0), 32e9, Origin::tx};
  EXPECT_THROW(add_pilot(w, 5e9, 1.0, 6e9), InvalidArgument);
  EXPECT_THROW(add_pilot(w, 17e9, 1.0), InvalidArgument);
  EXPECT_THROW(add_pilot(w, 8e9, -1.0), InvalidArgument);
}

TEST(Transmit, PilotLevelAndSpectrum) {
  const auto sym = sample_symbols(build_constellation(64, 0.129, 1.0), 100000, 1, 10e9);
  const auto cfg = TxConfig::for_symbol_rate(10e9);
  const Waveform w = transmit(sym, cfg);
  const Psd psd = welch_psd(w.samples, 1024, w.sample_rate);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < psd.size(); ++k)
    if (psd.density[k] > psd.density[peak]) peak = k;
  EXPECT_NEAR(psd.frequency(peak), 8e9, 32e9 / 1024);
  // pilot power 20 dB over the signal, reduced by |H(8 GHz)|^2 = 1/2 after the hardware stand-in
  const Waveform shaped = upsample_shape(sym, cfg);
  CVector residual = w.samples;
  const double amp = 10.0 * std::sqrt(mean_power(shaped.samples)) * std::sqrt(0.5);
  const Waveform tone = add_pilot(Waveform{CVector(w.size(), 0.0), 32e9, Origin::tx}, 8e9, amp);
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= tone.samples[i];
  EXPECT_NEAR(mean_power(residual) / mean_power(shaped.samples), 1.0, 0.02);
}

TEST(TxConfig, Defaults) {
  EXPECT_DOUBLE_EQ(TxConfig::for_symbol_rate(10e9).pilot_freq, 8e9);
  EXPECT_DOUBLE_EQ(TxConfig::for_symbol_rate(8e9).pilot_freq, 7e9);
  const TxConfig c;
  EXPECT_DOUBLE_EQ(c.dac_rate, 32e9);
  EXPECT_DOUBLE_EQ(c.rrc_rolloff, 0.2);
  EXPECT_DOUBLE_EQ(c.pilot_amp_ratio, 10.0);
  EXPECT_DOUBLE_EQ(c.preemphasis_floor, 0.1);
  EXPECT_EQ(c.tx_response.kind, FrequencyResponse::Kind::gaussian);
  EXPECT_DOUBLE_EQ(c.tx_response.f3db, 8e9);
  EXPECT_NEAR(std::norm(c.tx_response(8e9)), 0.5, 1e-12);
}

TEST(TxConfig, Validation) {
  auto c = TxConfig::for_symbol_rate(10e9);
  EXPECT_NO_THROW(c.validate());
  c.pilot_freq = 5.5e9;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c.pilot_freq = 16.5e9;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = TxConfig::for_symbol_rate(30e9);
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Waveform, Invariants) {
  EXPECT_THROW((Waveform{CVector{}, 1e9, Origin::tx}), InvalidArgument);
  EXPECT_THROW((Waveform{CVector(4), 0.0, Origin::tx}), InvalidArgument);
  EXPECT_TRUE(is_forward_transition(Origin::tx, Origin::channel));
  EXPECT_TRUE(is_forward_transition(Origin::channel, Origin::rx));
  EXPECT_FALSE(is_forward_transition(Origin::rx, Origin::tx));
  EXPECT_FALSE(is_forward_transition(Origin::channel, Origin::tx));
  EXPECT_FALSE(is_forward_transition(Origin::tx, Origin::rx));
  for (Origin o : {Origin::tx, Origin::channel, Origin::rx, Origin::vacuum_cal, Origin::electronic_cal})
    EXPECT_EQ(origin_from_string(to_string(o)), o);
}
