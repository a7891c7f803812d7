// Command-line front end: simulate | keyrate | sweep | contour | table1.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "cvqkd/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-modulated CV-QKD link simulator and key-rate toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  bool overwrite = false;

  for (const char* verb : {"simulate", "keyrate", "sweep", "contour", "table1"}) {
    auto* sub = app.add_subcommand(verb);
    sub->add_option("--config", config_path, "INI run configuration");
    sub->add_option("--seed", seed, "base seed (overrides [run] seed)");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_flag("--overwrite", overwrite, "write directly into --out instead of a fresh timestamped subdirectory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  const cvqkd::Mode mode = *cvqkd::mode_from_string(verb);

  cvqkd::RunConfig cfg;
  try {
    cfg = config_path.empty() ? cvqkd::parse_config_text("") : cvqkd::load_config(config_path);
    if (seed) cfg.sim.seed = *seed;
    cfg.validate(mode);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    cvqkd::RunOutcome o;
    switch (mode) {
      case cvqkd::Mode::simulate: o = cvqkd::run_simulate(cfg, out, overwrite); break;
      case cvqkd::Mode::keyrate: o = cvqkd::run_keyrate(cfg, out, overwrite); break;
      case cvqkd::Mode::sweep: o = cvqkd::run_sweep(cfg, out, overwrite); break;
      case cvqkd::Mode::contour: o = cvqkd::run_contour(cfg, out, overwrite); break;
      case cvqkd::Mode::table1: o = cvqkd::run_table1(cfg, out, overwrite); break;
    }
    std::cout << o.summary.dump(2) << '\n' << "output: " << o.dir.string() << '\n';
  } catch (const cvqkd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "pipeline failure: " << e.what() << '\n';
    return kExitPipeline;
  }
  return 0;
}
