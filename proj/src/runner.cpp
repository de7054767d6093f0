#include "qr/runner.hpp"

#include "qr/kernels.hpp"
#include "qr/level.hpp"
#include "qr/schedule.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace qr {

namespace {

// Richardson-extrapolated central differences; independent of the analytic
// expansion it is checking.
Real fd_central(const std::function<Real(const RealPoint&)>& fn, const RealPoint& y,
                const std::vector<int>& mi, const Real& h) {
  int var = -1;
  for (std::size_t i = 0; i < mi.size(); ++i)
    if (mi[i] > 0) {
      var = static_cast<int>(i);
      break;
    }
  if (var < 0) return fn(y);
  std::vector<int> lower = mi;
  lower[var] -= 1;
  RealPoint yp = y, ym = y;
  yp[var] += h;
  ym[var] -= h;
  return (fd_central(fn, yp, lower, h) - fd_central(fn, ym, lower, h)) / (2 * h);
}

Real fd_richardson(const std::function<Real(const RealPoint&)>& fn, const RealPoint& y,
                   const std::vector<int>& mi, const Real& h) {
  Real d1 = fd_central(fn, y, mi, h);
  Real d2 = fd_central(fn, y, mi, h / 2);
  return (4 * d2 - d1) / 3;
}

void multi_indices(int dim, int order, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(dim, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == dim - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, order);
}

}  // namespace

nlohmann::json kernel_check_suite(std::uint64_t seed, int points_per_case) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.01, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  nlohmann::json table = nlohmann::json::array();
  bool all_pass = true;

  for (int k : {1, 2}) {
    std::vector<long> ls = {1, 2, 3, k + 1};
    std::sort(ls.begin(), ls.end());
    ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
    for (long l : ls) {
      for (auto kind : {KernelKind::F, KernelKind::G, KernelKind::H}) {
        KernelSpec spec{kind, k, l, 2};
        auto eval = [&spec](const RealPoint& y) { return kernel_eval(spec, y); };
        nlohmann::json row;
        row["kind"] = (kind == KernelKind::F ? "F" : kind == KernelKind::G ? "G" : "H");
        row["k"] = k;
        row["l"] = l;

        // analytic vs FD on random points, all orders <= k
        double worst_rel = 0;
        std::vector<std::vector<int>> idxs;
        for (int order = 1; order <= k; ++order) multi_indices(2, order, idxs);
        for (int pt = 0; pt < points_per_case; ++pt) {
          RealPoint y(2);
          for (auto& c : y) c = Real(mag(rng)) * (coin(rng) ? 1 : -1);
          for (const auto& mi : idxs) {
            Real an = kernel_partial_analytic(spec, mi, y);
            Real fd = fd_richardson(eval, y, mi, Real("1e-4"));
            Real denom = std::max(Real(1), abs(an));
            worst_rel = std::max(worst_rel, (abs(an - fd) / denom).convert_to<double>());
          }
        }
        row["fd_rel_error"] = worst_rel;
        bool fd_ok = worst_rel <= 1e-6;

        // log-log decay slope of sum |d^j| along a generic ray
        bool slope_ok = true;
        nlohmann::json slopes = nlohmann::json::array();
        for (int order = 1; order <= k; ++order) {
          std::vector<std::vector<int>> omi;
          multi_indices(2, order, omi);
          std::vector<double> xs, ys;
          for (double t = 1e-4; t <= 1e-1 * 1.0001; t *= 3.1623) {
            RealPoint y{Real(t), Real(t) * Real("0.7")};
            Real total(0);
            for (const auto& mi : omi) total += abs(kernel_partial_analytic(spec, mi, y));
            if (total == 0) continue;
            xs.push_back(std::log(t));
            ys.push_back(log(total).convert_to<double>());
          }
          double slope = 0;
          if (xs.size() >= 2) {
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
              mx += xs[i];
              my += ys[i];
            }
            mx /= xs.size();
            my /= xs.size();
            double num = 0, den = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
              num += (xs[i] - mx) * (ys[i] - my);
              den += (xs[i] - mx) * (xs[i] - mx);
            }
            slope = num / den;
          }
          slopes.push_back(slope);
          if (slope < (2.0 * k - order) - 0.1) slope_ok = false;
        }
        row["decay_slopes"] = std::move(slopes);

        // per-term bounds over every enumerated derivative term
        bool bound_ok = true;
        for (int order = 0; order <= k && bound_ok; ++order) {
          auto terms = enumerate_terms(spec, order);
          for (int pt = 0; pt < points_per_case && bound_ok; ++pt) {
            RealPoint y(2);
            for (auto& c : y) c = Real(mag(rng)) * (coin(rng) ? 1 : -1);
            for (const auto& term : terms)
              if (!term_bound_check(spec, term, y)) bound_ok = false;
          }
        }
        row["term_bounds"] = bound_ok;

        // vanishing derivatives at the origin
        bool zero_ok = true;
        try {
          for (const auto& mi : idxs) kernel_partial_at_zero(spec, mi);
        } catch (const std::exception&) {
          zero_ok = false;
        }
        row["vanish_at_zero"] = zero_ok;

        bool pass = fd_ok && slope_ok && bound_ok && zero_ok;
        row["pass"] = pass;
        all_pass = all_pass && pass;
        table.push_back(std::move(row));
      }
    }
  }
  return nlohmann::json{{"cases", std::move(table)}, {"pass", all_pass}};
}

namespace {

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(1) << "\n";
}

void write_samples_csv(const std::string& path, const InputMap& input,
                       const SphereApproximant& approx) {
  std::ofstream out(path);
  for (int i = 1; i <= input.n; ++i) out << "x" << i << ",";
  for (int i = 1; i <= input.m + 1; ++i) out << "u" << i << ",";
  for (int i = 1; i <= input.m + 1; ++i) out << "w" << i << (i == input.m + 1 ? "" : ",");
  out << "\n";
  out.precision(17);
  for (const auto& p : input.M) {
    RealPoint x = to_real(p);
    for (int i = 0; i < input.n; ++i) out << to_double(p[i]) << ",";
    for (int i = 0; i <= input.m; ++i) out << input.u[i](x).convert_to<double>() << ",";
    for (int i = 0; i <= input.m; ++i)
      out << approx.w[i](x).convert_to<double>() << (i == input.m ? "" : ",");
    out << "\n";
  }
}

}  // namespace

RunResult run_approximate(const RunConfig& config, const std::string& out_dir, bool verbose) {
  RunResult res;
  std::filesystem::create_directories(out_dir);
  InputMap input;
  try {
    input = config.input_map();
  } catch (const std::exception& e) {
    return {kConfigError, {}, std::string("config: ") + e.what()};
  }
  PipelineOptions opts = config.pipeline_options();
  SphereApproximant approx;
  try {
    approx = approximate(input, opts);
  } catch (const PipelineError& e) {
    return {kConstructionError, {}, std::string("construction failed ") + e.what()};
  } catch (const LevelError& e) {
    return {kConstructionError, {}, std::string("construction failed ") + e.what()};
  } catch (const std::exception& e) {
    return {kConstructionError, {}, std::string("construction failed: ") + e.what()};
  }
  nlohmann::json ver = verify(approx, input, config.fd_h);
  nlohmann::json report;
  report["config_seed"] = config.seed;
  report["mode"] = config.exact_mode ? "exact" : "float";
  report["construction"] = approx.report;
  report["verification"] = ver;
  write_json(out_dir + "/report.json", report);
  write_json(out_dir + "/approximant.json", approx.to_json());
  write_samples_csv(out_dir + "/samples.csv", input, approx);
  if (verbose) std::cerr << report.dump(1) << "\n";
  res.report = std::move(report);
  bool pass = ver.at("passes").get<bool>();
  if (config.exact_mode && ver.at("exact_identity_failures").get<int>() > 0) pass = false;
  if (!pass) {
    res.exit_code = kVerificationError;
    res.message = "verification failed; see report.json";
  } else {
    res.message = "ok; artifacts in " + out_dir;
  }
  return res;
}

RunResult run_verify(const RunConfig& config, const std::string& out_dir, bool verbose) {
  // Re-verifies a stored approximant against the configured input map.
  std::string path = out_dir + "/approximant.json";
  std::ifstream in(path);
  if (!in) return {kConfigError, {}, "no stored approximant at " + path};
  nlohmann::json j;
  in >> j;
  InputMap input;
  try {
    input = config.input_map();
  } catch (const std::exception& e) {
    return {kConfigError, {}, std::string("config: ") + e.what()};
  }
  SphereApproximant approx;
  try {
    approx.n = j.at("n").get<int>();
    approx.m = j.at("m").get<int>();
    approx.k = j.at("k").get<int>();
    approx.shortcut = j.at("shortcut").get<bool>();
    approx.vlast = RatExpr::from_json(j.at("vlast"));
    for (const auto& cj : j.at("ubar")) {
      QuasiRegulousFn ub;
      ub.core = RatExpr::from_json(cj.at("core"));
      ub.trivial_sign = cj.at("trivial_sign").get<bool>();
      for (const auto& z : cj.at("sign_zeros"))
        ub.signs.zeros.push_back(rat_from_string(z.get<std::string>()));
      ub.signs.interval_signs = cj.at("interval_signs").get<std::vector<int>>();
      for (const auto& z : ub.signs.zeros) ub.zero_samples.push_back({to_real(z)});
      auto core = ub.core;
      auto signs = ub.signs;
      bool trivial = ub.trivial_sign;
      ub.fn = {approx.n, [core, signs, trivial](std::span<const Real> x) {
                 RealPoint p(x.begin(), x.end());
                 Real v = core->eval_real(p);
                 if (trivial) return v;
                 int s = signs.sign_at_real(p[0]);
                 return s == 0 ? Real(0) : Real(s) * abs(v);
               }};
      approx.ubar.push_back(std::move(ub));
    }
    for (const auto& vj : j.at("vbar_chain"))
      approx.vbar_chain.push_back(RatExpr::from_json(vj));
    auto vlast = approx.vlast;
    for (int i = 0; i <= approx.m; ++i) {
      RealFn ui = approx.ubar[i].fn;
      approx.w.push_back({approx.n, [ui, vlast](std::span<const Real> x) {
                            RealPoint p(x.begin(), x.end());
                            return ui.f(x) / vlast->eval_real(p);
                          }});
    }
  } catch (const std::exception& e) {
    return {kConfigError, {}, std::string("stored approximant unreadable: ") + e.what()};
  }
  nlohmann::json ver = verify(approx, input, config.fd_h);
  if (verbose) std::cerr << ver.dump(1) << "\n";
  RunResult res;
  res.report = ver;
  if (!ver.at("passes").get<bool>()) {
    res.exit_code = kVerificationError;
    res.message = "verification failed";
  } else {
    res.message = "verification ok";
  }
  return res;
}

RunResult run_kernel_check(const RunConfig& config, const std::string& out_dir) {
  nlohmann::json j = kernel_check_suite(config.seed);
  std::filesystem::create_directories(out_dir);
  write_json(out_dir + "/kernel_check.json", j);
  std::cout << j.dump(1) << "\n";
  RunResult res;
  res.report = j;
  if (!j.at("pass").get<bool>()) {
    res.exit_code = kVerificationError;
    res.message = "kernel checks failed";
  }
  return res;
}

RunResult run_level_demo(const RunConfig& config, const std::string& out_dir) {
  if (!config.f_text || !config.G_radius || !config.l_demo)
    return {kConfigError, {}, "level-demo needs \"f\", \"G_radius\" and \"l\" in the config"};
  ExprPtr fe, ge;
  try {
    fe = parse_expr(*config.f_text, config.n);
    ge = config.g_text ? parse_expr(*config.g_text, config.n)
                       : parse_expr("1", config.n);
  } catch (const ParseError& e) {
    return {kConfigError, {}, std::string("bad expression: ") + e.what()};
  }
  BallDomain G(RatPoint(config.n, Rat(0)), *config.G_radius);
  LevelOptions opts;
  opts.grid_h = config.grid_h;
  opts.p_degree_cap = config.degree_cap;
  opts.c_degree_cap = config.c_degree_cap;
  opts.certify_1d = (config.n == 1 && config.exact_mode);
  try {
    LevelOutput out = run_level(expr_fn(fe, config.n), expr_fn(ge, config.n), G, config.eps,
                                *config.l_demo, opts);
    std::filesystem::create_directories(out_dir);
    write_json(out_dir + "/level.json", out.to_json());
    std::cout << out.to_json().dump(1) << "\n";
    return {kOk, out.to_json(), "ok"};
  } catch (const LevelError& e) {
    return {kConstructionError, {}, std::string("level failed ") + e.what()};
  }
}

RunResult run_schedule(const RunConfig& config) {
  nlohmann::json rows = nlohmann::json::array();
  for (int s = 1; s <= config.m; ++s) {
    long long l = schedule_l(config.m, config.k, s);
    std::cout << "step " << s << ": l=" << l << "\n";
    rows.push_back({{"step", s}, {"l", l}});
  }
  bool consistent = schedule_consistency(config.m, config.k);
  std::cout << "chain consistent: " << (consistent ? "yes" : "no") << "\n";
  RunResult res;
  res.report = {{"schedule", rows}, {"consistent", consistent}};
  if (!consistent) res.exit_code = kConstructionError;
  return res;
}

}  // namespace qr
