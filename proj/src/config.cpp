#include "qr/config.hpp"

#include <fstream>

namespace qr {

namespace {

Rat rat_from_jsonval(const nlohmann::json& v) {
  if (v.is_string()) return rat_from_string(v.get<std::string>());
  if (v.is_number_integer()) return Rat(v.get<long>());
  if (v.is_number_float()) return exact_rat(v.get<double>());
  throw ConfigError("expected a number or a rational string");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.n = j.at("n").get<int>();
    c.m = j.at("m").get<int>();
    c.k = j.at("k").get<int>();
    c.eps = rat_from_jsonval(j.at("epsilon"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("missing required field: ") + e.what());
  }
  if (c.n < 1 || c.n > 2) throw ConfigError("n must be 1 or 2 at desk scale");
  if (c.m < 1) throw ConfigError("m must be >= 1");
  if (c.k < 1) throw ConfigError("k must be >= 1");
  if (!(c.eps > 0 && c.eps < 1)) throw ConfigError("epsilon must lie in (0,1)");

  if (j.contains("mode")) {
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "exact")
      c.exact_mode = true;
    else if (mode == "float")
      c.exact_mode = false;
    else
      throw ConfigError("mode must be \"exact\" or \"float\"");
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("grid_h")) c.grid_h = rat_from_jsonval(j.at("grid_h"));
  if (c.grid_h <= 0) throw ConfigError("grid_h must be positive");
  if (j.contains("degree_cap")) c.degree_cap = j.at("degree_cap").get<int>();
  if (j.contains("c_degree_cap")) c.c_degree_cap = j.at("c_degree_cap").get<int>();
  if (j.contains("nash_degree_cap")) c.nash_degree_cap = j.at("nash_degree_cap").get<int>();
  if (j.contains("fd_h")) c.fd_h = j.at("fd_h").get<double>();
  if (j.contains("l_override"))
    for (const auto& v : j.at("l_override")) c.l_override.push_back(v.get<long long>());

  // M: explicit points or a sampled box
  if (j.contains("M")) {
    const auto& M = j.at("M");
    if (M.contains("points")) {
      for (const auto& p : M.at("points")) {
        RatPoint x;
        for (const auto& v : p) x.push_back(rat_from_jsonval(v));
        if (static_cast<int>(x.size()) != c.n)
          throw ConfigError("point dimension differs from n");
        c.M.push_back(std::move(x));
      }
    } else if (M.contains("box")) {
      const auto& box = M.at("box");
      std::vector<Rat> lo, hi;
      for (const auto& v : box.at("lo")) lo.push_back(rat_from_jsonval(v));
      for (const auto& v : box.at("hi")) hi.push_back(rat_from_jsonval(v));
      int density = box.at("density").get<int>();
      if (static_cast<int>(lo.size()) != c.n || static_cast<int>(hi.size()) != c.n)
        throw ConfigError("box dimension differs from n");
      if (density < 2) throw ConfigError("box density must be >= 2");
      std::vector<std::pair<Rat, Rat>> axes;
      for (int i = 0; i < c.n; ++i) {
        if (!(lo[i] < hi[i])) throw ConfigError("box needs lo < hi per axis");
        axes.emplace_back(lo[i], hi[i]);
      }
      c.M = uniform_grid(BoxDomain(std::move(axes)), density);
    } else {
      throw ConfigError("M must contain \"points\" or \"box\"");
    }
  }

  if (j.contains("u")) {
    for (const auto& s : j.at("u")) {
      std::string text = s.get<std::string>();
      c.u_text.push_back(text);
      try {
        c.u.push_back(parse_expr(text, c.n));
      } catch (const ParseError& e) {
        throw ConfigError("bad component expression \"" + text + "\": " + e.what());
      }
    }
    if (static_cast<int>(c.u.size()) != c.m + 1)
      throw ConfigError("u must list exactly m+1 component expressions");
  }

  if (j.contains("f")) c.f_text = j.at("f").get<std::string>();
  if (j.contains("g")) c.g_text = j.at("g").get<std::string>();
  if (j.contains("G_radius")) c.G_radius = rat_from_jsonval(j.at("G_radius"));
  if (j.contains("l")) c.l_demo = j.at("l").get<long long>();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

PipelineOptions RunConfig::pipeline_options() const {
  PipelineOptions o;
  o.seed = seed;
  o.nash_degree_cap = nash_degree_cap;
  o.level.grid_h = grid_h;
  o.level.p_degree_cap = degree_cap;
  o.level.c_degree_cap = c_degree_cap;
  o.l_override = l_override;
  o.fd_h = fd_h;
  return o;
}

InputMap RunConfig::input_map() const {
  if (M.empty()) throw ConfigError("config has no point set M");
  if (u.empty()) throw ConfigError("config has no map components u");
  std::vector<RealFn> fns;
  for (const auto& e : u) fns.push_back(expr_fn(e, n));
  return make_input_map(n, m, M, std::move(fns), k, eps);
}

}  // namespace qr
