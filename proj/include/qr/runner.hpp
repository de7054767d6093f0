#pragma once

#include "qr/config.hpp"

#include <string>

#include <json.hpp>

namespace qr {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kConstructionError = 3,
  kVerificationError = 4,
};

// Lemma-level check of the kernel module driven by an independent
// finite-difference oracle (Richardson-extrapolated central differences):
// analytic/FD agreement, decay slopes near the origin, and the per-term
// bounds for every enumerated derivative term.  Returns a pass/fail table.
nlohmann::json kernel_check_suite(std::uint64_t seed, int points_per_case = 50);

struct RunResult {
  int exit_code = kOk;
  nlohmann::json report;
  std::string message;
};

RunResult run_approximate(const RunConfig& config, const std::string& out_dir, bool verbose);
RunResult run_verify(const RunConfig& config, const std::string& out_dir, bool verbose);
RunResult run_kernel_check(const RunConfig& config, const std::string& out_dir);
RunResult run_level_demo(const RunConfig& config, const std::string& out_dir);
RunResult run_schedule(const RunConfig& config);

}  // namespace qr
