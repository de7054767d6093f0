#pragma once

#include "qr/expr.hpp"
#include "qr/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int n = 1, m = 1, k = 1;
  Rat eps = Rat(1, 20);
  bool exact_mode = true;  // "exact" | "float"
  std::uint64_t seed = 1;
  std::vector<RatPoint> M;
  std::vector<std::string> u_text;
  std::vector<ExprPtr> u;
  Rat grid_h = Rat(1, 500);
  int degree_cap = 256;       // sign-polynomial cap
  int c_degree_cap = 4096;    // Chebyshev factor cap
  int nash_degree_cap = 64;
  std::vector<long long> l_override;
  double fd_h = 1e-3;

  // level-demo extras
  std::optional<std::string> f_text, g_text;
  std::optional<Rat> G_radius;
  std::optional<long long> l_demo;

  PipelineOptions pipeline_options() const;
  InputMap input_map() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);
};

}  // namespace qr
