#pragma once

// Run configuration: INI file with sections, every key optional, unknown keys
// rejected. See README for the schema.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvqkd/error.hpp"
#include "cvqkd/simulation.hpp"

namespace cvqkd {

enum class Mode { simulate, keyrate, sweep, contour, table1 };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::keyrate: return "keyrate";
    case Mode::sweep: return "sweep";
    case Mode::contour: return "contour";
    case Mode::table1: return "table1";
  }
  return "?";
}

inline std::optional<Mode> mode_from_string(std::string_view s) {
  for (Mode m : {Mode::simulate, Mode::keyrate, Mode::sweep, Mode::contour, Mode::table1})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

struct KeyrateSettings {
  double symbol_rate = 8e9;
  std::size_t block_N = 16000000;
  bool optimize_nu = false;
};

struct SweepSettings {
  double d_min_km = 0.0;
  double d_max_km = 20.0;
  double d_step_km = 1.0;
  double symbol_rate = 10e9;
  double loss_db_per_km = 0.2;
  bool optimize_nu = false;
};

struct ContourSettings {
  double loss_min_db = 0.0;
  double loss_max_db = 10.0;
  int loss_steps = 41;
  double eps_min = 0.0;
  double eps_max = 0.1;
  int eps_steps = 41;
  double v_mod = 1.0;
  double v_el = 0.05;
  double symbol_rate = 10e9;
};

struct RunConfig {
  std::optional<Mode> mode;   // from [run] mode, if given
  SimulationConfig sim;       // constellation, tx, channel, detector, rx, block, seed, beta, z_pe
  KeyrateSettings keyrate;
  SweepSettings sweep;
  ContourSettings contour;
  int threads = 0;            // 0: hardware concurrency
  bool pilot_freq_set = false;

  void validate(Mode m) const;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* b = v.data();
  const char* e = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(b, e, x);
  if (ec != std::errc() || ptr != e || !std::isfinite(x)) throw ConfigError("'" + key + "': not a finite number: '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);  // allows 1e6 style
  if (x != std::floor(x) || std::abs(x) > 9e15) throw ConfigError("'" + key + "': not an integer: '" + v + "'");
  return static_cast<long long>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': not a boolean: '" + v + "'");
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct KeySpec {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Ref>
KeySpec real_key(std::string sec, std::string key, Ref ref, double unit = 1.0) {
  return {sec, key,
          [ref, unit](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_double(k, v) * unit; },
          [ref, unit](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c)) / unit); }};
}

template <typename T, typename Ref>
KeySpec int_key(std::string sec, std::string key, Ref ref) {
  return {sec, key,
          [ref](RunConfig& c, const std::string& k, const std::string& v) {
            const long long x = parse_integer(k, v);
            if (x < 0 && std::is_unsigned_v<T>) throw ConfigError("'" + k + "' must be non-negative");
            ref(c) = static_cast<T>(x);
          },
          [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

template <typename Ref>
KeySpec bool_key(std::string sec, std::string key, Ref ref) {
  return {sec, key, [ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_bool(k, v); },
          [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

inline FrequencyResponse::Kind response_kind(const std::string& k, const std::string& v) {
  if (v == "flat") return FrequencyResponse::Kind::flat;
  if (v == "gaussian") return FrequencyResponse::Kind::gaussian;
  if (v == "butterworth2") return FrequencyResponse::Kind::butterworth2;
  throw ConfigError("'" + k + "': expected flat, gaussian or butterworth2, got '" + v + "'");
}

// clang-format off
inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    s.push_back({"run", "mode",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   auto m = mode_from_string(v);
                   if (!m) throw ConfigError("'" + k + "': unknown mode '" + v + "'");
                   c.mode = m;
                 },
                 [](const RunConfig& c) { return c.mode ? std::string(to_string(*c.mode)) : std::string(); }});
    s.push_back({"run", "seed",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   std::uint64_t x = 0;
                   auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
                   if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("'" + k + "': not an unsigned integer");
                   c.sim.seed = x;
                 },
                 [](const RunConfig& c) { return std::to_string(c.sim.seed); }});
    s.push_back(int_key<int>("run", "threads", [](RunConfig& c) -> int& { return c.threads; }));

    s.push_back(int_key<int>("constellation", "M", [](RunConfig& c) -> int& { return c.sim.M; }));
    s.push_back(real_key("constellation", "nu", [](RunConfig& c) -> double& { return c.sim.nu; }));
    s.push_back(real_key("constellation", "v_mod", [](RunConfig& c) -> double& { return c.sim.v_mod; }));

    s.push_back(real_key("tx", "symbol_rate_gbaud", [](RunConfig& c) -> double& { return c.sim.tx.symbol_rate; }, 1e9));
    s.push_back(real_key("tx", "dac_rate_hz", [](RunConfig& c) -> double& { return c.sim.tx.dac_rate; }));
    s.push_back(real_key("tx", "rrc_rolloff", [](RunConfig& c) -> double& { return c.sim.tx.rrc_rolloff; }));
    s.push_back(int_key<int>("tx", "rrc_span", [](RunConfig& c) -> int& { return c.sim.tx.rrc_span; }));
    s.push_back({"tx", "pilot_freq_hz",
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.sim.tx.pilot_freq = parse_double(k, v);
                   c.pilot_freq_set = true;
                 },
                 [](const RunConfig& c) { return fmt(c.sim.tx.pilot_freq); }});
    s.push_back(real_key("tx", "pilot_amp_ratio", [](RunConfig& c) -> double& { return c.sim.tx.pilot_amp_ratio; }));
    s.push_back({"tx", "tx_response",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.tx.tx_response.kind = response_kind(k, v); },
                 [](const RunConfig& c) { return std::string(to_string(c.sim.tx.tx_response.kind)); }});
    s.push_back(real_key("tx", "tx_response_f3db_hz", [](RunConfig& c) -> double& { return c.sim.tx.tx_response.f3db; }));
    s.push_back(real_key("tx", "preemphasis_floor", [](RunConfig& c) -> double& { return c.sim.tx.preemphasis_floor; }));
    s.push_back(bool_key("tx", "simulate_tx_response", [](RunConfig& c) -> bool& { return c.sim.tx.simulate_tx_response; }));

    s.push_back(real_key("channel", "distance_km", [](RunConfig& c) -> double& { return c.sim.channel.distance_km; }));
    s.push_back(real_key("channel", "loss_db_per_km", [](RunConfig& c) -> double& { return c.sim.channel.loss_db_per_km; }));
    s.push_back(real_key("channel", "coupling_eff", [](RunConfig& c) -> double& { return c.sim.channel.coupling_eff; }));
    s.push_back({"channel", "transmittance",
                 [](RunConfig& c, const std::string& k, const std::string& v) { c.sim.channel.transmittance_override = parse_double(k, v); },
                 [](const RunConfig& c) { return c.sim.channel.transmittance_override ? fmt(*c.sim.channel.transmittance_override) : std::string(); }});
    s.push_back(real_key("channel", "excess_noise", [](RunConfig& c) -> double& { return c.sim.channel.excess_noise; }));
    s.push_back(real_key("channel", "freq_offset_hz", [](RunConfig& c) -> double& { return c.sim.channel.freq_offset_hz; }));
    s.push_back(real_key("channel", "linewidth_hz", [](RunConfig& c) -> double& { return c.sim.channel.linewidth_hz; }));

    s.push_back(real_key("detector", "efficiency", [](RunConfig& c) -> double& { return c.sim.detector.efficiency; }));
    s.push_back(real_key("detector", "v_el", [](RunConfig& c) -> double& { return c.sim.detector.v_el; }));
    s.push_back(real_key("detector", "adc_rate_hz", [](RunConfig& c) -> double& { return c.sim.detector.adc_rate; }));
    s.push_back(int_key<int>("detector", "adc_bits", [](RunConfig& c) -> int& { return c.sim.detector.adc_bits; }));
    s.push_back(real_key("detector", "rx_bandwidth_hz", [](RunConfig& c) -> double& { return c.sim.detector.rx_bandwidth_hz; }));
    s.push_back(real_key("detector", "full_scale_rms", [](RunConfig& c) -> double& { return c.sim.detector.full_scale_rms; }));
    s.push_back(real_key("detector", "max_clip_fraction", [](RunConfig& c) -> double& { return c.sim.detector.max_clip_fraction; }));

    s.push_back(int_key<int>("rx", "whitening_taps", [](RunConfig& c) -> int& { return c.sim.rx.whitening_taps; }));
    s.push_back(int_key<std::size_t>("rx", "welch_nfft", [](RunConfig& c) -> std::size_t& { return c.sim.rx.welch_nfft; }));
    s.push_back(real_key("rx", "pilot_search_band_hz", [](RunConfig& c) -> double& { return c.sim.rx.pilot_search_band; }));
    s.push_back(real_key("rx", "pilot_track_band_hz", [](RunConfig& c) -> double& { return c.sim.rx.pilot_track_band; }));
    s.push_back(int_key<std::size_t>("rx", "sync_search_window", [](RunConfig& c) -> std::size_t& { return c.sim.rx.sync_search_window; }));
    s.push_back(int_key<std::size_t>("rx", "sync_ref_symbols", [](RunConfig& c) -> std::size_t& { return c.sim.rx.sync_ref_symbols; }));
    s.push_back(int_key<std::size_t>("rx", "timing_ref_symbols", [](RunConfig& c) -> std::size_t& { return c.sim.rx.timing_ref_symbols; }));

    s.push_back(int_key<std::size_t>("simulate", "block_N", [](RunConfig& c) -> std::size_t& { return c.sim.block_N; }));
    s.push_back(int_key<std::size_t>("simulate", "guard_symbols", [](RunConfig& c) -> std::size_t& { return c.sim.guard_symbols; }));
    s.push_back(int_key<std::size_t>("simulate", "calibration_samples", [](RunConfig& c) -> std::size_t& { return c.sim.calibration_samples; }));

    s.push_back(real_key("security", "beta", [](RunConfig& c) -> double& { return c.sim.beta; }));
    s.push_back(real_key("security", "z_pe", [](RunConfig& c) -> double& { return c.sim.z_pe; }));
    s.push_back(real_key("security", "eps_pe_fail", [](RunConfig& c) -> double& { return c.sim.eps_pe_fail; }));

    s.push_back(real_key("keyrate", "symbol_rate_gbaud", [](RunConfig& c) -> double& { return c.keyrate.symbol_rate; }, 1e9));
    s.push_back(int_key<std::size_t>("keyrate", "block_N", [](RunConfig& c) -> std::size_t& { return c.keyrate.block_N; }));
    s.push_back(bool_key("keyrate", "optimize_nu", [](RunConfig& c) -> bool& { return c.keyrate.optimize_nu; }));

    s.push_back(real_key("sweep", "d_min_km", [](RunConfig& c) -> double& { return c.sweep.d_min_km; }));
    s.push_back(real_key("sweep", "d_max_km", [](RunConfig& c) -> double& { return c.sweep.d_max_km; }));
    s.push_back(real_key("sweep", "d_step_km", [](RunConfig& c) -> double& { return c.sweep.d_step_km; }));
    s.push_back(real_key("sweep", "symbol_rate_gbaud", [](RunConfig& c) -> double& { return c.sweep.symbol_rate; }, 1e9));
    s.push_back(real_key("sweep", "loss_db_per_km", [](RunConfig& c) -> double& { return c.sweep.loss_db_per_km; }));
    s.push_back(bool_key("sweep", "optimize_nu", [](RunConfig& c) -> bool& { return c.sweep.optimize_nu; }));

    s.push_back(real_key("contour", "loss_min_db", [](RunConfig& c) -> double& { return c.contour.loss_min_db; }));
    s.push_back(real_key("contour", "loss_max_db", [](RunConfig& c) -> double& { return c.contour.loss_max_db; }));
    s.push_back(int_key<int>("contour", "loss_steps", [](RunConfig& c) -> int& { return c.contour.loss_steps; }));
    s.push_back(real_key("contour", "eps_min", [](RunConfig& c) -> double& { return c.contour.eps_min; }));
    s.push_back(real_key("contour", "eps_max", [](RunConfig& c) -> double& { return c.contour.eps_max; }));
    s.push_back(int_key<int>("contour", "eps_steps", [](RunConfig& c) -> int& { return c.contour.eps_steps; }));
    s.push_back(real_key("contour", "v_mod", [](RunConfig& c) -> double& { return c.contour.v_mod; }));
    s.push_back(real_key("contour", "v_el", [](RunConfig& c) -> double& { return c.contour.v_el; }));
    s.push_back(real_key("contour", "symbol_rate_gbaud", [](RunConfig& c) -> double& { return c.contour.symbol_rate; }, 1e9));
    return s;
  }();
  return specs;
}
// clang-format on

}  // namespace detail

/// Parse INI text. Every key is optional; unknown sections and keys are errors.
inline RunConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  std::map<std::string, const detail::KeySpec*> index;
  for (const auto& s : detail::key_specs()) index[s.section + "." + s.key] = &s;

  RunConfig cfg;
  cfg.sim.tx = TxConfig::for_symbol_rate(8e9);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      auto it = index.find(full);
      if (it == index.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second->set(cfg, full, node.data());
    }
  }
  if (!cfg.pilot_freq_set) cfg.sim.tx.pilot_freq = TxConfig::for_symbol_rate(cfg.sim.tx.symbol_rate).pilot_freq;
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

/// Every effective key in canonical order, as INI text.
inline std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& s : detail::key_specs()) {
    const std::string v = s.get(cfg);
    if (v.empty()) continue;
    if (s.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << s.section << "]\n";
      section = s.section;
    }
    os << s.key << " = " << v << '\n';
  }
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void RunConfig::validate(Mode m) const {
  try {
    if (mode && *mode != m)
      throw ConfigError("config mode '" + std::string(to_string(*mode)) + "' does not match the requested verb '" +
                        std::string(to_string(m)) + "'");
    detail::require(threads >= 0, "threads must be >= 0");
    switch (m) {
      case Mode::simulate: sim.validate(); break;
      case Mode::keyrate:
        (void)build_constellation(sim.M, sim.nu, sim.v_mod);
        sim.channel.validate();
        sim.detector.validate();
        detail::require(sim.beta >= 0.0 && sim.beta <= 1.0, "beta must lie in [0, 1]");
        detail::require(sim.z_pe >= 0.0, "z_pe must be >= 0");
        detail::require(keyrate.symbol_rate > 0.0, "keyrate symbol rate must be positive");
        detail::require(keyrate.block_N >= 2, "keyrate block_N must be >= 2");
        break;
      case Mode::sweep:
        detail::require(sweep.d_min_km >= 0.0 && sweep.d_max_km >= sweep.d_min_km && sweep.d_step_km > 0.0,
                        "sweep distance grid invalid");
        detail::require(sweep.symbol_rate > 0.0 && sweep.loss_db_per_km >= 0.0, "sweep rate/loss invalid");
        sim.detector.validate();
        break;
      case Mode::contour:
        detail::require(contour.loss_steps >= 2 && contour.eps_steps >= 2, "contour grids need >= 2 steps");
        detail::require(contour.loss_min_db >= 0.0 && contour.loss_max_db > contour.loss_min_db, "contour loss range invalid");
        detail::require(contour.eps_min >= 0.0 && contour.eps_max > contour.eps_min, "contour eps range invalid");
        detail::require(contour.v_mod > 0.0 && contour.v_el >= 0.0 && contour.symbol_rate > 0.0, "contour parameters invalid");
        sim.detector.validate();
        break;
      case Mode::table1: break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace cvqkd
