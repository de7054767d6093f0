// Command-line front end: approximate | verify | kernel-check | level-demo |
// schedule.  Exit codes: 0 ok, 2 config error, 3 construction failure,
// 4 verification failure.

#include "qr/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"constructive sphere-map approximation by quasi-regulous maps"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", mode, grid;
  std::uint64_t seed = 0;
  bool have_seed = false, verbose = false;

  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--mode", mode, "exact | float (overrides the config)");
  app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    have_seed = true;
  });
  app.add_option("--grid", grid, "grid step h override (rational or decimal)");
  app.add_flag("--verbose", verbose, "print the report to stderr");

  auto* cmd_approx = app.add_subcommand("approximate", "run the full pipeline");
  auto* cmd_verify = app.add_subcommand("verify", "re-verify a stored approximant");
  auto* cmd_kernel = app.add_subcommand("kernel-check", "kernel module pass/fail table");
  auto* cmd_level = app.add_subcommand("level-demo", "run the level construction on f, g");
  auto* cmd_sched = app.add_subcommand("schedule", "print the root-exponent table for m, k");

  CLI11_PARSE(app, argc, argv);

  qr::RunConfig config;
  if (cmd_sched->parsed() || cmd_kernel->parsed()) {
    // these run with defaults when no config is given
    if (!config_path.empty()) {
      try {
        config = qr::RunConfig::from_file(config_path);
      } catch (const qr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qr::kConfigError;
      }
    }
  } else {
    if (config_path.empty()) {
      std::cerr << "config error: --config is required\n";
      return qr::kConfigError;
    }
    try {
      config = qr::RunConfig::from_file(config_path);
    } catch (const qr::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return qr::kConfigError;
    }
  }
  if (!mode.empty()) {
    if (mode != "exact" && mode != "float") {
      std::cerr << "config error: --mode must be exact or float\n";
      return qr::kConfigError;
    }
    config.exact_mode = (mode == "exact");
  }
  if (have_seed) config.seed = seed;
  if (!grid.empty()) {
    try {
      config.grid_h = qr::rat_from_string(grid);
    } catch (const std::exception&) {
      std::cerr << "config error: bad --grid value\n";
      return qr::kConfigError;
    }
    if (config.grid_h <= 0) {
      std::cerr << "config error: --grid must be positive\n";
      return qr::kConfigError;
    }
  }

  qr::RunResult res;
  if (cmd_approx->parsed()) res = qr::run_approximate(config, out_dir, verbose);
  if (cmd_verify->parsed()) res = qr::run_verify(config, out_dir, verbose);
  if (cmd_kernel->parsed()) res = qr::run_kernel_check(config, out_dir);
  if (cmd_level->parsed()) res = qr::run_level_demo(config, out_dir);
  if (cmd_sched->parsed()) res = qr::run_schedule(config);

  if (!res.message.empty()) std::cerr << res.message << "\n";
  return res.exit_code;
}
