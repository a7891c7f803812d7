#pragma once

// On-disk formats.
//
// Waveform file: a 64-byte ASCII header
//   "CVQKDWF1 rate=<Hz> origin=<name> length=<n>"  padded with spaces, last byte '\n'
// followed by n little-endian float32 pairs (re, im).
//
// Recovered symbols: CSV "k,re,im" plus a JSON metadata file.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cvqkd/error.hpp"
#include "cvqkd/recovered.hpp"
#include "cvqkd/waveform.hpp"

namespace cvqkd {

inline constexpr std::size_t kWaveformHeaderBytes = 64;

namespace detail {

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace detail

inline std::string waveform_header(const Waveform& w) {
  std::ostringstream os;
  os << "CVQKDWF1 rate=" << std::setprecision(17) << w.sample_rate << " origin=" << to_string(w.origin)
     << " length=" << w.size();
  std::string h = os.str();
  detail::require(h.size() < kWaveformHeaderBytes, "waveform header does not fit in 64 bytes");
  h.resize(kWaveformHeaderBytes - 1, ' ');
  h.push_back('\n');
  return h;
}

inline void write_waveform(const std::filesystem::path& path, const Waveform& w) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << waveform_header(w);
  std::vector<std::uint32_t> buf(2 * w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    buf[2 * i] = detail::to_little(std::bit_cast<std::uint32_t>(static_cast<float>(w.samples[i].real())));
    buf[2 * i + 1] = detail::to_little(std::bit_cast<std::uint32_t>(static_cast<float>(w.samples[i].imag())));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  if (!os) throw Error("write failed for " + path.string());
}

inline Waveform read_waveform(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::string header(kWaveformHeaderBytes, '\0');
  is.read(header.data(), static_cast<std::streamsize>(header.size()));
  if (!is || header.rfind("CVQKDWF1 ", 0) != 0) throw Error(path.string() + ": not a waveform file");
  std::istringstream hs(header.substr(9));
  double rate = 0.0;
  std::string origin;
  std::size_t length = 0;
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "rate") rate = std::stod(val);
    else if (key == "origin") origin = val;
    else if (key == "length") length = std::stoull(val);
  }
  if (length == 0 || rate <= 0.0 || origin.empty()) throw Error(path.string() + ": incomplete waveform header");
  std::vector<std::uint32_t> buf(2 * length);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  if (!is) throw Error(path.string() + ": truncated sample data");
  CVector s(length);
  for (std::size_t i = 0; i < length; ++i)
    s[i] = {std::bit_cast<float>(detail::to_little(buf[2 * i])), std::bit_cast<float>(detail::to_little(buf[2 * i + 1]))};
  return {std::move(s), rate, origin_from_string(origin)};
}

inline void write_recovered_csv(const std::filesystem::path& path, const RecoveredSymbols& r) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "k,re,im\n" << std::setprecision(10);
  for (std::size_t k = 0; k < r.size(); ++k) os << k << ',' << r.symbols[k].real() << ',' << r.symbols[k].imag() << '\n';
}

inline nlohmann::json recovered_metadata(const RecoveredSymbols& r) {
  return {{"symbols", r.size()},
          {"alignment_offset_samples", r.alignment_offset},
          {"pilot_freq_estimate_hz", r.pilot_freq_estimate},
          {"residual_rotation_rad", r.residual_rotation},
          {"peak_to_sidelobe_db", r.peak_to_sidelobe_db}};
}

inline void write_recovered_metadata(const std::filesystem::path& path, const RecoveredSymbols& r) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << recovered_metadata(r).dump(2) << '\n';
}

inline RecoveredSymbols read_recovered(const std::filesystem::path& csv, const std::filesystem::path& meta) {
  RecoveredSymbols r;
  std::ifstream is(csv);
  if (!is) throw Error("cannot open " + csv.string());
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string k, re, im;
    std::getline(ls, k, ',');
    std::getline(ls, re, ',');
    std::getline(ls, im, ',');
    r.symbols.emplace_back(std::stod(re), std::stod(im));
  }
  std::ifstream ms(meta);
  if (!ms) throw Error("cannot open " + meta.string());
  const auto j = nlohmann::json::parse(ms);
  r.alignment_offset = j.at("alignment_offset_samples").get<double>();
  r.pilot_freq_estimate = j.at("pilot_freq_estimate_hz").get<double>();
  r.residual_rotation = j.at("residual_rotation_rad").get<double>();
  r.peak_to_sidelobe_db = j.at("peak_to_sidelobe_db").get<double>();
  return r;
}

}  // namespace cvqkd
