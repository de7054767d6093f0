#include "qr/level.hpp"

#include "qr/parallel.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <sstream>

namespace qr {

nlohmann::json LevelSide::to_json() const {
  nlohmann::json j;
  j["P"] = P.to_json();
  j["P_degree"] = p_degree;
  j["P_fit_error"] = p_fit_error;
  j["ftilde"] = ftilde.to_json();
  j["delta"] = rat_to_string(delta);
  j["eps1"] = rat_to_string(eps1);
  j["alpha"] = rat_to_string(alpha);
  j["eta"] = rat_to_string(eta);
  j["achieved_error"] = achieved_error;
  nlohmann::json zp = nlohmann::json::array();
  for (const auto& z : zero_points) zp.push_back(rat_to_string(z));
  j["zero_points"] = std::move(zp);
  if (sturm_root_count) j["sturm_root_count"] = *sturm_root_count;
  return j;
}

nlohmann::json LevelOutput::to_json() const {
  nlohmann::json j;
  j["l"] = l;
  j["eps"] = rat_to_string(eps);
  j["f_side"] = f_side.to_json();
  j["g_side"] = g_side.to_json();
  j["rho"] = tube.rho;
  j["components"] = components.to_json();
  j["fg_tube_sup"] = fg_tube_sup;
  return j;
}

namespace {

double rd(const Rat& q) { return to_double(q); }

// Ternary search for the minimum of fn on [lo, hi] (unimodal near a zero).
std::pair<Real, Real> refine_min_1d(const RealFn& fn, Real lo, Real hi, int iters = 80) {
  for (int i = 0; i < iters; ++i) {
    Real m1 = lo + (hi - lo) / 3;
    Real m2 = hi - (hi - lo) / 3;
    if (fn.at1(m1) <= fn.at1(m2))
      hi = m2;
    else
      lo = m1;
  }
  Real x = (lo + hi) / 2;
  return {x, fn.at1(x)};
}

}  // namespace

std::vector<Rat> detect_nonneg_zeros(GridRegion& region, const RealFn& fn, double zero_tol) {
  std::vector<Rat> points;
  long total = region.cell_count();
  Real scale(0), slope(0);
  double h = rd(region.h);
  for (long f = 0; f < total; ++f) {
    if (region.labels[f] == CellLabel::Outside) continue;
    scale = std::max(scale, abs(region.values[f]));
  }
  if (region.dim() == 1) {
    for (long f = 0; f + 1 < total; ++f)
      if (region.labels[f] != CellLabel::Outside && region.labels[f + 1] != CellLabel::Outside)
        slope = std::max(slope, abs(region.values[f + 1] - region.values[f]) / Real(h));
    Real cand_tol = Real(4 * h) * std::max(slope, Real(1));
    Real zero_thresh = Real(zero_tol) * std::max(scale, Real(1));
    for (long f = 0; f < total; ++f) {
      if (region.labels[f] == CellLabel::Outside) continue;
      bool left_ok = (f == 0) || region.labels[f - 1] == CellLabel::Outside ||
                     region.values[f] <= region.values[f - 1];
      bool right_ok = (f + 1 == total) || region.labels[f + 1] == CellLabel::Outside ||
                      region.values[f] <= region.values[f + 1];
      if (!(left_ok && right_ok)) continue;
      if (region.values[f] > cand_tol) continue;
      RatPoint c = region.cell_center(f);
      auto [x, v] = refine_min_1d(fn, to_real(c[0]) - Real(h), to_real(c[0]) + Real(h));
      if (v <= zero_thresh) {
        Rat z = dyadic_round(x, 128);
        bool dup = false;
        for (const auto& p : points)
          if (abs(to_real(p - z)) < Real(h) / 2) dup = true;
        if (!dup) points.push_back(z);
      }
    }
    // mark cells near the refined zeros
    for (const auto& z : points) {
      double zx = rd(z);
      double a = rd(region.box.axes[0].first);
      long j = std::lround((zx - a) / h - 0.5);
      for (long d = -1; d <= 1; ++d) {
        long idx = j + d;
        if (idx >= 0 && idx < total && region.labels[idx] != CellLabel::Outside)
          region.labels[idx] = CellLabel::Zero;
      }
    }
  } else {
    // cell resolution only: near-zero cells marked, centers reported
    for (long f = 0; f < total; ++f) {
      if (region.labels[f] == CellLabel::Outside) continue;
      auto idx = region.unflatten(f);
      for (int i = 0; i < region.dim(); ++i) {
        if (idx[i] + 1 >= region.dims[i]) continue;
        long g = f + region.strides[i];
        if (region.labels[g] == CellLabel::Outside) continue;
        slope = std::max(slope, abs(region.values[g] - region.values[f]) / Real(h));
      }
    }
    Real cand_tol = Real(2 * h) * std::max(slope, Real(1));
    for (long f = 0; f < total; ++f) {
      if (region.labels[f] == CellLabel::Outside) continue;
      if (region.values[f] <= cand_tol) {
        region.labels[f] = CellLabel::Zero;
        RatPoint c = region.cell_center(f);
        points.push_back(c[0]);  // representative coordinate only
      }
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Thresholds

namespace {

// One side's delta and eps1 against its own zero set.
std::pair<Rat, Rat> side_thresholds(const BallDomain& G, const GridRegion& fg_region,
                                    const std::vector<Real>& values,
                                    const std::vector<long>& zero_cells,
                                    const TubularInfo& tube, const Real& eps_half,
                                    const std::vector<char>& tight_mask,
                                    const Real& tight_half) {
  double h = rd(fg_region.h);
  long total = fg_region.cell_count();
  auto inside = [&](long f) { return fg_region.labels[f] != CellLabel::Outside; };

  double delta = rd(G.radius) / 8;
  if (!zero_cells.empty()) {
    for (;;) {
      if (delta < h)
        throw GridError("select_thresholds: no delta >= h separates the sublevel sets; "
                        "decrease the grid step h");
      auto mask = dilate_zero_set(fg_region, zero_cells, 2 * delta);
      bool ok = true;
      for (long f = 0; f < total && ok; ++f) {
        if (!inside(f) || !mask[f]) continue;
        if (values[f] >= eps_half) ok = false;
        if (!tight_mask.empty() && tight_mask[f] && values[f] >= tight_half) ok = false;
        if (!tube.in_tube.empty() && !tube.in_tube[f]) ok = false;
      }
      if (ok) break;
      delta /= 2;
    }
  }

  auto mask = dilate_zero_set(fg_region, zero_cells, delta);
  Real vmin(-1);
  for (long f = 0; f < total; ++f) {
    if (!inside(f) || mask[f]) continue;
    if (vmin < 0 || values[f] < vmin) vmin = values[f];
  }
  if (vmin <= 0)
    throw GridError("select_thresholds: side function not positive off its "
                    "delta-neighborhood; zero set under-resolved, decrease h");
  Real eps1 = std::min(vmin / 2, Real(1023) / 1024);
  for (int tries = 0; tries < 60; ++tries) {
    bool strict = true;
    for (long f = 0; f < total && strict; ++f) {
      if (!inside(f) || mask[f]) continue;
      if (values[f] <= eps1) strict = false;
    }
    if (strict) break;
    eps1 /= 2;
  }
  return {dyadic_round(Real(delta), 64), dyadic_round(eps1, 64)};
}

}  // namespace

Thresholds select_thresholds(const BallDomain& G, const Rat& eps,
                             const GridRegion& fg_region, const Components& A,
                             const std::vector<Real>& f_values,
                             const std::vector<Real>& g_values,
                             const std::vector<long>& f_zero_cells,
                             const std::vector<long>& g_zero_cells,
                             const std::vector<char>& tight_mask, const Rat& tight_eps) {
  Thresholds out;
  Real eps_half = to_real(eps) / 2;
  Real tight_half = tight_eps > 0 ? to_real(tight_eps) / 2 : eps_half;
  out.tube = tubular_radius(fg_region, A, G, to_real(eps));
  // tighten the tube further where the tight scale applies
  if (!tight_mask.empty() && !out.tube.zero_cells.empty()) {
    double h = rd(fg_region.h);
    while (true) {
      bool ok = true;
      for (long f = 0; f < fg_region.cell_count() && ok; ++f) {
        if (!out.tube.in_tube[f] || !tight_mask[f]) continue;
        if (fg_region.labels[f] == CellLabel::Outside) continue;
        if (abs(fg_region.values[f]) >= tight_half * 2) ok = false;
      }
      if (ok) break;
      double rho = out.tube.rho / 2;
      if (rho < h)
        throw GridError("select_thresholds: tight tube bound unreachable; decrease h");
      out.tube.rho = rho;
      out.tube.in_tube = dilate_zero_set(fg_region, out.tube.zero_cells, rho);
      // unique-core condition must survive the shrink
      (void)A;
    }
  }

  auto [df, e1f] = side_thresholds(G, fg_region, f_values, f_zero_cells, out.tube, eps_half,
                                   tight_mask, tight_half);
  auto [dg, e1g] = side_thresholds(G, fg_region, g_values, g_zero_cells, out.tube, eps_half,
                                   tight_mask, tight_half);
  out.delta_f = df;
  out.eps1_f = e1f;
  out.delta_g = dg;
  out.eps1_g = e1g;
  return out;
}

// ---------------------------------------------------------------------------
// Sign polynomial

namespace {

struct SignCheck {
  bool ok = true;
  std::string detail;
};

SignCheck check_sign_conditions(const MultiPoly& P, const GridRegion& grid,
                                const std::vector<long>& zero_cells,
                                const std::vector<Rat>& zero_points,
                                const std::vector<char>& nbhd_mask) {
  SignCheck out;
  for (const auto& z : zero_points) {
    RatPoint zp{z};
    if (grid.dim() == 1 && P(zp) >= 0) {
      out.ok = false;
      out.detail = "P >= 0 at a refined zero point";
      return out;
    }
  }
  for (long f : zero_cells) {
    if (P(to_real(grid.cell_center(f))) >= 0) {
      out.ok = false;
      out.detail = "P >= 0 at a zero cell";
      return out;
    }
  }
  for (long f = 0; f < grid.cell_count(); ++f) {
    if (grid.labels[f] == CellLabel::Outside) continue;
    if (!nbhd_mask.empty() && nbhd_mask[f]) continue;
    if (P(to_real(grid.cell_center(f))) <= 0) {
      out.ok = false;
      out.detail = "P <= 0 off the delta-neighborhood";
      return out;
    }
  }
  return out;
}

}  // namespace

SignPolyResult build_sign_poly(const RealFn& side_fn, const BallDomain& G,
                               const GridRegion& grid, const std::vector<Real>& side_values,
                               const std::vector<long>& side_zero_cells,
                               const std::vector<Rat>& side_zero_points, const Rat& delta,
                               const Rat& eps1, int degree_cap) {
  (void)side_values;
  Real shift = to_real(eps1) / 2;
  RealFn target{side_fn.nvars,
                [side_fn, shift](std::span<const Real> x) { return side_fn.f(x) - shift; }};
  BoxDomain box = G.enclosing_box();
  FitResult fit;
  std::string exhausted_msg;
  try {
    fit = approx_sw_fn(target, box, degree_cap, to_real(eps1) / 4);
  } catch (const DegreeExhausted& e) {
    fit = e.best;
    exhausted_msg = e.what();
  }
  auto nbhd = dilate_zero_set(grid, side_zero_cells, rd(delta));
  SignCheck sc = check_sign_conditions(fit.poly, grid, side_zero_cells, side_zero_points, nbhd);
  if (!sc.ok) {
    std::ostringstream msg;
    msg << "degree exhausted before sign conditions hold (cap " << degree_cap
        << "): " << sc.detail;
    if (!exhausted_msg.empty()) msg << "; " << exhausted_msg;
    throw LevelError("build_PQ", msg.str());
  }
  return SignPolyResult{fit.poly, fit.degree_used, fit.achieved_sup};
}

// ---------------------------------------------------------------------------
// Factorization

namespace {

struct CellArrays {
  std::vector<long> cells;       // inside cells
  std::vector<Real> fv, Pv, P2l; // side value, P value, P^{2l}
  std::vector<char> nbhd;        // delta-neighborhood flag per entry
  std::vector<Real> eps_half;    // per-cell half tolerance (two-scale)
};

CellArrays collect_cells(const MultiPoly& P, const GridRegion& grid,
                         const std::vector<Real>& side_values,
                         const std::vector<long>& zero_cells, long long l, const Rat& delta,
                         const Rat& eps, const std::vector<char>& tight_mask,
                         const Rat& tight_eps) {
  CellArrays a;
  auto mask = dilate_zero_set(grid, zero_cells, rd(delta));
  Real global_half = to_real(eps) / 2;
  Real tight_half = tight_eps > 0 ? to_real(tight_eps) / 2 : global_half;
  for (long f = 0; f < grid.cell_count(); ++f) {
    if (grid.labels[f] == CellLabel::Outside) continue;
    a.cells.push_back(f);
    a.fv.push_back(side_values[f]);
    a.nbhd.push_back(mask.empty() ? 0 : mask[f]);
    bool tight = !tight_mask.empty() && tight_mask[f];
    a.eps_half.push_back(tight ? tight_half : global_half);
  }
  a.Pv.resize(a.cells.size());
  a.P2l.resize(a.cells.size());
  parallel_for(a.cells.size(), [&](std::size_t i) {
    Real p = P(to_real(grid.cell_center(a.cells[i])));
    a.Pv[i] = p;
    a.P2l[i] = (p == 0) ? Real(0) : pow(p, static_cast<int>(2 * l));
  });
  return a;
}

// Chebyshev interpolation coefficients of fn at n+1 first-kind nodes.
std::vector<Real> cheb_interp(const std::function<Real(const Real&)>& fn, const Real& lo,
                              const Real& hi, int n) {
  int N = n + 1;
  Real mid = (lo + hi) / 2, rad = (hi - lo) / 2;
  std::vector<Real> theta(N), vals(N);
  Real pi = pi_real();
  for (int j = 0; j < N; ++j) {
    theta[j] = pi * (2 * j + 1) / (2 * N);
    vals[j] = fn(mid + rad * cos(theta[j]));
  }
  std::vector<Real> coeff(N, Real(0));
  // accumulate cos(k theta_j) by per-j recurrence
  for (int j = 0; j < N; ++j) {
    Real c1 = cos(theta[j]);
    Real prev2 = Real(1), prev1 = c1;
    coeff[0] += vals[j];
    if (N > 1) coeff[1] += vals[j] * c1;
    for (int k = 2; k < N; ++k) {
      Real ck = 2 * c1 * prev1 - prev2;
      coeff[k] += vals[j] * ck;
      prev2 = prev1;
      prev1 = ck;
    }
  }
  for (int k = 0; k < N; ++k) coeff[k] *= Real(2) / N;
  coeff[0] /= 2;
  return coeff;
}

}  // namespace

FactorizeResult factorize(const MultiPoly& P, const GridRegion& grid,
                          const std::vector<Real>& side_values,
                          const std::vector<long>& side_zero_cells, long long l,
                          const Rat& delta, const Rat& eps1, const Rat& eps,
                          int c_degree_cap, const std::vector<char>& tight_mask,
                          const Rat& tight_eps) {
  CellArrays a =
      collect_cells(P, grid, side_values, side_zero_cells, l, delta, eps, tight_mask, tight_eps);
  const std::size_t n_cells = a.cells.size();

  // ---- alpha -------------------------------------------------------------
  Real cap1(-1);
  for (std::size_t i = 0; i < n_cells; ++i)
    if (a.nbhd[i]) {
      Real margin = a.eps_half[i] - a.fv[i];
      if (cap1 < 0 || margin < cap1) cap1 = margin;
    }
  if (cap1 < 0) cap1 = Real(1);
  if (cap1 <= 0)
    throw LevelError("factorize", "sup of the side function over the delta-neighborhood "
                                  "reaches eps/2; thresholds inconsistent");
  Real seed = std::min(Real(1), cap1 / 2);
  for (std::size_t i = 0; i < n_cells; ++i) {
    if (a.nbhd[i]) continue;
    Real bound = a.eps_half[i] * a.P2l[i] / (a.fv[i] + 1);
    seed = std::min(seed, bound / 2);
  }
  auto alpha_ok = [&](const Real& al) {
    for (std::size_t i = 0; i < n_cells; ++i) {
      Real q = (a.fv[i] + al) * a.P2l[i] / (a.P2l[i] + al);
      if (a.nbhd[i]) {
        if (q >= a.eps_half[i]) return false;
      } else {
        if (abs(q - a.fv[i]) >= a.eps_half[i]) return false;
      }
    }
    return true;
  };
  Real alpha = seed;
  int halvings = 0;
  while (!alpha_ok(alpha)) {
    alpha /= 2;
    if (++halvings > 60)
      throw LevelError("factorize",
                       "alpha search exceeded 60 halvings from its analytic seed");
  }
  Rat alpha_q = dyadic_round(alpha, 96);
  if (alpha_q <= 0) alpha_q = Rat(1, Int(1) << 200);
  alpha = to_real(alpha_q);

  // ---- t-range and the Chebyshev factor ----------------------------------
  Real t_min = a.Pv[0], t_max = a.Pv[0];
  for (const auto& p : a.Pv) {
    t_min = std::min(t_min, p);
    t_max = std::max(t_max, p);
  }
  Real span = t_max - t_min;
  Real eps1_half = to_real(eps1) / 2;
  FactorizeResult out;
  out.alpha = alpha_q;

  auto tau = [&](const Real& t) {
    Real sigma = t + eps1_half;
    if (sigma < 0) sigma = 0;
    Real t2l = (t == 0) ? Real(0) : pow(t, static_cast<int>(2 * l));
    return sqrt((sigma + alpha) / (t2l + alpha));
  };

  auto try_eta = [&](const ChebPoly& c, Rat& eta_out) -> bool {
    // cached c(P) values
    std::vector<Real> cv(n_cells);
    parallel_for(n_cells, [&](std::size_t i) { cv[i] = c(a.Pv[i]); });
    // eta bracket from the two displayed inequalities
    Real eta_hi(-1), eta_lo(0);
    for (std::size_t i = 0; i < n_cells; ++i) {
      Real s1 = cv[i] * cv[i] * a.P2l[i];
      if (a.P2l[i] == 0) continue;
      if (a.nbhd[i]) {
        Real cap = (a.eps_half[i] - s1) / a.P2l[i];
        if (cap <= 0) return false;
        if (eta_hi < 0 || cap < eta_hi) eta_hi = cap;
      } else {
        Real cap = (a.eps_half[i] + a.fv[i] - s1) / a.P2l[i];
        if (cap <= 0) return false;
        if (eta_hi < 0 || cap < eta_hi) eta_hi = cap;
        Real need = (a.fv[i] - a.eps_half[i] - s1) / a.P2l[i];
        if (need > eta_lo) eta_lo = need;
      }
    }
    if (eta_hi < 0) eta_hi = Real(1);
    if (eta_lo >= eta_hi) return false;
    // halving from 1 per the construction; fall back to the bracket midpoint
    Real eta(1);
    int tries = 0;
    while ((eta >= eta_hi || eta <= eta_lo) && tries++ < 60) eta /= 2;
    if (eta >= eta_hi || eta <= eta_lo) eta = (eta_lo + eta_hi) / 2;
    if (eta <= 0) return false;
    Rat eta_q = dyadic_round(eta, 96);
    if (eta_q <= 0) return false;
    // final verification of both inequalities at the chosen eta
    Real eq = to_real(eta_q);
    for (std::size_t i = 0; i < n_cells; ++i) {
      Real v = (cv[i] * cv[i] + eq) * a.P2l[i];
      if (a.nbhd[i]) {
        if (v >= a.eps_half[i]) return false;
      } else {
        if (abs(v - a.fv[i]) >= a.eps_half[i]) return false;
      }
    }
    eta_out = eta_q;
    return true;
  };

  if (span <= (abs(t_max) + 1) * Real("1e-12")) {
    // constant sign polynomial (no zero set on this side)
    Real t_mid = (t_min + t_max) / 2;
    Real c0 = tau(t_mid);
    Rat lo = dyadic_round(t_mid - 1, 64), hi = dyadic_round(t_mid + 1, 64);
    ChebPoly c(lo, hi, {dyadic_round(c0, 96)});
    Rat eta_q;
    if (!try_eta(c, eta_q))
      throw LevelError("factorize", "constant-side factorization failed its inequalities");
    out.ftilde = FactoredPositive{c, P, eta_q};
    out.eta = eta_q;
    out.c_degree = 0;
    return out;
  }

  Real pad = span / 50;
  Rat lo_q = dyadic_round(t_min - pad, 64);
  Rat hi_q = dyadic_round(t_max + pad, 64);
  Real lo = to_real(lo_q), hi = to_real(hi_q);
  for (int n_c = 64; n_c <= c_degree_cap; n_c *= 2) {
    std::vector<Real> coeff = cheb_interp(tau, lo, hi, n_c);
    std::vector<Rat> cq(coeff.size());
    for (std::size_t i = 0; i < coeff.size(); ++i) cq[i] = dyadic_round(coeff[i], 120);
    ChebPoly c(lo_q, hi_q, std::move(cq));
    Rat eta_q;
    if (try_eta(c, eta_q)) {
      out.ftilde = FactoredPositive{c, P, eta_q};
      out.eta = eta_q;
      out.c_degree = c.degree();
      return out;
    }
  }
  std::ostringstream msg;
  msg << "Chebyshev factor degree cap " << c_degree_cap
      << " insufficient for exponent 2l=" << 2 * l
      << " (target dynamic range ~ (t_hi/t_lo)^{2l}); raise c_degree_cap or lower l";
  throw LevelError("factorize", msg.str());
}

// ---------------------------------------------------------------------------
// run_level

LevelOutput run_level(const RealFn& f, const RealFn& g, const BallDomain& G, const Rat& eps,
                      long long l, const LevelOptions& opts,
                      const std::vector<Rat>* f_zero_hint,
                      const std::vector<Rat>* g_zero_hint) {
  if (!(eps > 0 && eps < 1))
    throw LevelError("run_level", "precision eps must lie in (0,1)");
  if (l < 1) throw LevelError("run_level", "exponent l must be >= 1");

  // ---- per-side grids -----------------------------------------------------
  GridRegion f_region = label_grid(f, G, opts.grid_h);
  GridRegion g_region = label_grid(g, G, opts.grid_h);
  long total = f_region.cell_count();
  for (long c = 0; c < total; ++c) {
    if (f_region.labels[c] == CellLabel::Outside) continue;
    if (f_region.values[c] < -Real("1e-12") || g_region.values[c] < -Real("1e-12"))
      throw LevelError("run_level", "inputs must be nonnegative on the closed ball");
  }

  std::vector<Rat> f_zeros, g_zeros;
  auto apply_hint = [&](GridRegion& region, const std::vector<Rat>& hint) {
    double h = rd(region.h);
    double a0 = rd(region.box.axes[0].first);
    for (const auto& z : hint) {
      long j = std::lround((rd(z) - a0) / h - 0.5);
      for (long d = -1; d <= 1; ++d)
        if (j + d >= 0 && j + d < total && region.labels[j + d] != CellLabel::Outside)
          region.labels[j + d] = CellLabel::Zero;
    }
  };
  if (f_zero_hint && f_region.dim() == 1) {
    f_zeros = *f_zero_hint;
    apply_hint(f_region, f_zeros);
  } else {
    f_zeros = detect_nonneg_zeros(f_region, f);
  }
  if (g_zero_hint && g_region.dim() == 1) {
    g_zeros = *g_zero_hint;
    apply_hint(g_region, g_zeros);
  } else {
    g_zeros = detect_nonneg_zeros(g_region, g);
  }
  std::vector<long> f_zero_cells = zero_cells_of(f_region);
  std::vector<long> g_zero_cells = zero_cells_of(g_region);

  // ---- product grid -------------------------------------------------------
  GridRegion fg = f_region;
  for (long c = 0; c < total; ++c) {
    if (fg.labels[c] == CellLabel::Outside) continue;
    fg.values[c] = f_region.values[c] * g_region.values[c];
    fg.labels[c] = (f_region.labels[c] == CellLabel::Zero ||
                    g_region.labels[c] == CellLabel::Zero)
                       ? CellLabel::Zero
                       : CellLabel::Positive;
  }
  // compactness of the zero set inside G
  for (long c = 0; c < total; ++c) {
    if (fg.labels[c] != CellLabel::Zero) continue;
    auto idx = fg.unflatten(c);
    for (int i = 0; i < fg.dim(); ++i) {
      for (int d : {-2, -1, 1, 2}) {
        long j = idx[i] + d;
        if (j < 0 || j >= fg.dims[i]) {
          throw LevelError("run_level", "(f g)^{-1}(0) is not compactly contained in G "
                                        "on the grid");
        }
        long nb = c + d * fg.strides[i];
        if (fg.labels[nb] == CellLabel::Outside)
          throw LevelError("run_level", "(f g)^{-1}(0) is not compactly contained in G "
                                        "on the grid");
      }
    }
  }

  Components A = components(fg);

  // ---- two-scale mask -------------------------------------------------------
  std::vector<char> tight_mask;
  Rat tight_eps = opts.tight_eps;
  if (opts.tight_box && tight_eps > 0 && tight_eps < eps) {
    tight_mask.assign(total, 0);
    for (long c = 0; c < total; ++c) {
      if (fg.labels[c] == CellLabel::Outside) continue;
      if (opts.tight_box->contains(fg.cell_center(c))) tight_mask[c] = 1;
    }
  } else {
    tight_eps = 0;
  }

  // ---- thresholds (tube, per-side delta and eps1) ---------------------------
  Thresholds th;
  try {
    th = select_thresholds(G, eps, fg, A, f_region.values, g_region.values, f_zero_cells,
                           g_zero_cells, tight_mask, tight_eps);
  } catch (const GridError& e) {
    throw LevelError("select_thresholds", e.what());
  }

  // ---- sign polynomials ----------------------------------------------------
  SignPolyResult Pres = build_sign_poly(f, G, f_region, f_region.values, f_zero_cells,
                                        f_zeros, th.delta_f, th.eps1_f, opts.p_degree_cap);
  SignPolyResult Qres = build_sign_poly(g, G, g_region, g_region.values, g_zero_cells,
                                        g_zeros, th.delta_g, th.eps1_g, opts.p_degree_cap);

  // ---- components of the sign-polynomial product ---------------------------
  MultiPoly PQ = Pres.P * Qres.P;
  RealFn pq_fn{f.nvars, [PQ](std::span<const Real> x) {
                 RealPoint p(x.begin(), x.end());
                 return PQ(p);
               }};
  GridRegion pq_region = label_grid(pq_fn, G, opts.grid_h);
  Components B = components(pq_region);
  ComponentMap match;
  try {
    match = match_components(fg, A, pq_region, B, th.tube);
  } catch (const MatchError& e) {
    throw LevelError("match_components", e.what());
  }

  // ---- factorization --------------------------------------------------------
  FactorizeResult Fres =
      factorize(Pres.P, f_region, f_region.values, f_zero_cells, l, th.delta_f, th.eps1_f,
                eps, opts.c_degree_cap, tight_mask, tight_eps);
  FactorizeResult Gres =
      factorize(Qres.P, g_region, g_region.values, g_zero_cells, l, th.delta_g, th.eps1_g,
                eps, opts.c_degree_cap, tight_mask, tight_eps);

  // ---- verification on the finer grid ---------------------------------------
  LevelOutput out;
  out.l = l;
  out.eps = eps;
  out.tube = th.tube;
  out.components = match;
  out.fg_grid = fg;
  out.pq_grid = pq_region;
  out.f_side = LevelSide{Pres.P, Fres.ftilde, th.delta_f,      th.eps1_f,
                         Fres.alpha, Fres.eta, Pres.degree,    Pres.fit_error,
                         Fres.c_degree, 0.0,   f_zeros,        std::nullopt};
  out.g_side = LevelSide{Qres.P, Gres.ftilde, th.delta_g,      th.eps1_g,
                         Gres.alpha, Gres.eta, Qres.degree,    Qres.fit_error,
                         Gres.c_degree, 0.0,   g_zeros,        std::nullopt};

  {
    Rat h_fine = opts.grid_h / opts.verify_refine;
    BoxDomain box = G.enclosing_box();
    int per_axis = static_cast<int>(rd((box.axes[0].second - box.axes[0].first) / h_fine)) + 1;
    per_axis = std::min(per_axis, 100000);
    auto pts = uniform_grid(box, per_axis);
    Real err_f(0), err_g(0), tube_sup(0), tight_err(0), tight_tube(0);
    Real eps_r = to_real(eps);
    Real tight_r = tight_eps > 0 ? to_real(tight_eps) : eps_r;
    std::vector<Real> errs_f(pts.size(), Real(0)), errs_g(pts.size(), Real(0)),
        tubes(pts.size(), Real(0));
    std::vector<char> valid(pts.size(), 0), tightp(pts.size(), 0);
    double rho = th.tube.rho;
    parallel_for(pts.size(), [&](std::size_t i) {
      if (!G.contains(pts[i])) return;
      valid[i] = 1;
      if (tight_eps > 0 && opts.tight_box->contains(pts[i])) tightp[i] = 1;
      RealPoint x = to_real(pts[i]);
      Real fv = f(x), gv = g(x);
      Real pv = Pres.P(x), qv = Qres.P(x);
      Real p2l = (pv == 0) ? Real(0) : pow(pv, static_cast<int>(2 * l));
      Real q2l = (qv == 0) ? Real(0) : pow(qv, static_cast<int>(2 * l));
      errs_f[i] = abs(fv - Fres.ftilde.value(x) * p2l);
      errs_g[i] = abs(gv - Gres.ftilde.value(x) * q2l);
      // distance to the refined zero set (1-D) or zero cells
      double dist = 1e300;
      if (fg.dim() == 1) {
        for (const auto& z : f_zeros) dist = std::min(dist, std::abs(rd(pts[i][0] - z)));
        for (const auto& z : g_zeros) dist = std::min(dist, std::abs(rd(pts[i][0] - z)));
      } else {
        for (long zc : th.tube.zero_cells) {
          RatPoint c = fg.cell_center(zc);
          double d2 = 0;
          for (int k = 0; k < fg.dim(); ++k) d2 += rd(pts[i][k] - c[k]) * rd(pts[i][k] - c[k]);
          dist = std::min(dist, std::sqrt(d2));
        }
      }
      if (dist <= rho) tubes[i] = abs(fv * gv);
    });
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!valid[i]) continue;
      err_f = std::max(err_f, errs_f[i]);
      err_g = std::max(err_g, errs_g[i]);
      tube_sup = std::max(tube_sup, tubes[i]);
      if (tightp[i]) {
        tight_err = std::max(tight_err, std::max(errs_f[i], errs_g[i]));
        tight_tube = std::max(tight_tube, tubes[i]);
      }
    }
    out.f_side.achieved_error = err_f.convert_to<double>();
    out.g_side.achieved_error = err_g.convert_to<double>();
    out.fg_tube_sup = tube_sup.convert_to<double>();
    if (err_f > eps_r || err_g > eps_r) {
      std::ostringstream msg;
      msg << "achieved errors exceed eps: ||f - ftilde P^2l|| = " << out.f_side.achieved_error
          << ", ||g - gtilde Q^2l|| = " << out.g_side.achieved_error << ", eps = " << rd(eps);
      throw LevelError("verify", msg.str());
    }
    if (!th.tube.zero_cells.empty() && tube_sup >= eps_r)
      throw LevelError("verify", "||f g|| over the closed tube reaches eps");
    if (tight_eps > 0 && (tight_err > tight_r || tight_tube >= tight_r)) {
      std::ostringstream msg;
      msg << "tight-scale bound violated: error " << tight_err.convert_to<double>()
          << ", tube sup " << tight_tube.convert_to<double>() << ", tight eps " << rd(tight_eps);
      throw LevelError("verify", msg.str());
    }
  }

  // ---- optional exact 1-D certification -------------------------------------
  if (opts.certify_1d && fg.dim() == 1) {
    const auto& [ga, gb] = fg.box.axes[0];
    for (auto* side : {&out.f_side, &out.g_side}) {
      UniPoly up = UniPoly::from_multipoly(side->P);
      SturmSequence seq = SturmSequence::build(up);
      side->sturm_root_count = seq.count_roots(ga, gb);
      for (const auto& z : side->zero_points)
        if (up(z) >= 0)
          throw LevelError("certify", "exact sign check failed: P(z) >= 0 at a zero point");
    }
  }
  return out;
}

}  // namespace qr
