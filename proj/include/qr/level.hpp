// The level construction: given continuous nonnegative f, g on the closed
// ball G with compact zero set, produce sign polynomials P, Q, a tubular
// neighborhood T of the zero set, the component matching, and factored
// positive approximants with ||f - ftilde P^{2l}|| <= eps on G.

#pragma once

#include "qr/approx.hpp"
#include "qr/components.hpp"
#include "qr/grid.hpp"
#include "qr/multipoly.hpp"
#include "qr/ratexpr.hpp"
#include "qr/realfn.hpp"
#include "qr/sturm.hpp"
#include "qr/unipoly.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qr {

struct LevelError : std::runtime_error {
  std::string stage;
  LevelError(const std::string& stage_, const std::string& msg)
      : std::runtime_error("[" + stage_ + "] " + msg), stage(stage_) {}
};

// Strictly positive polynomial c(P(x))^2 + eta held in factored form; the
// Chebyshev factor keeps evaluation stable at any degree.
struct FactoredPositive {
  ChebPoly c;
  MultiPoly P;
  Rat eta;

  Real value(const RealPoint& x) const {
    Real t = c(P(x));
    return t * t + to_real(eta);
  }
  Rat value(const RatPoint& x) const {
    Rat t = c(P(x));
    return t * t + eta;
  }
  // ftilde as an expression over a shared P node.
  RatExprPtr as_expr(const RatExprPtr& P_expr) const {
    auto inner = RatExpr::compose(c, P_expr);
    return RatExpr::add(RatExpr::pow(inner, 2),
                        RatExpr::make_const(P_expr->nvars, eta));
  }
  nlohmann::json to_json() const {
    return nlohmann::json{{"form", "c(P)^2+eta"},
                          {"c", c.to_json()},
                          {"eta", rat_to_string(eta)},
                          {"c_degree", c.degree()}};
  }
};

struct LevelOptions {
  Rat grid_h = Rat(1, 500);
  int p_degree_cap = 256;   // sign polynomial fit cap
  int c_degree_cap = 4096;  // Chebyshev factor cap
  bool certify_1d = false;  // Sturm certification of P/Q root layout (n = 1)
  int verify_refine = 4;    // verification grid is this much finer

  // Two-scale precision: the construction meets `eps` on all of G and the
  // tighter `tight_eps` on the cells inside `tight_box` (where the final
  // approximation target lives).  Unset = single scale.
  std::optional<BoxDomain> tight_box;
  Rat tight_eps = 0;
};

struct LevelSide {
  MultiPoly P;
  FactoredPositive ftilde;
  Rat delta, eps1, alpha, eta;
  int p_degree = 0;
  double p_fit_error = 0;
  long c_degree = 0;
  double achieved_error = 0;           // sup |f - ftilde P^{2l}| on the verification grid
  std::vector<Rat> zero_points;        // refined zeros of the side function (1-D)
  std::optional<int> sturm_root_count; // certified root count of P in G (1-D)

  nlohmann::json to_json() const;
};

struct LevelOutput {
  long long l = 1;
  Rat eps;
  LevelSide f_side, g_side;
  TubularInfo tube;
  ComponentMap components;
  GridRegion fg_grid;  // labeled product grid (A components live here)
  GridRegion pq_grid;  // labeled sign-polynomial grid (B components live here)
  double fg_tube_sup = 0;  // sup |f g| over the tube on the verification grid

  nlohmann::json to_json() const;
};

// Individual stages (exposed for tests); run_level wires them together.

struct Thresholds {
  Rat delta_f, eps1_f;
  Rat delta_g, eps1_g;
  TubularInfo tube;
};

// Chooses the tubular radius (halving from radius/4), then per-side deltas
// (halving from radius/8) until the 2delta-neighborhood sup bounds hold and
// the 2delta-neighborhoods sit inside the tube; per-side eps1 = half the
// off-neighborhood minimum of that side, capped below 1, halved further
// while the strict sublevel inclusion fails.  The two sides get independent
// thresholds because their zero sets may have very different slopes.
Thresholds select_thresholds(const BallDomain& G, const Rat& eps,
                             const GridRegion& fg_region, const Components& A,
                             const std::vector<Real>& f_values,
                             const std::vector<Real>& g_values,
                             const std::vector<long>& f_zero_cells,
                             const std::vector<long>& g_zero_cells,
                             const std::vector<char>& tight_mask, const Rat& tight_eps);

// Fits side - eps1/2 escalating the degree until the four sign conditions
// hold on the grid.  Returns the polynomial plus fit diagnostics.
struct SignPolyResult {
  MultiPoly P;
  int degree = 0;
  double fit_error = 0;
};
SignPolyResult build_sign_poly(const RealFn& side_fn, const BallDomain& G,
                               const GridRegion& grid, const std::vector<Real>& side_values,
                               const std::vector<long>& side_zero_cells,
                               const std::vector<Rat>& side_zero_points, const Rat& delta,
                               const Rat& eps1, int degree_cap);

// Factored positive approximant with ||side - ftilde P^{2l}||_G <= eps.
struct FactorizeResult {
  FactoredPositive ftilde;
  Rat alpha, eta;
  long c_degree = 0;
};
FactorizeResult factorize(const MultiPoly& P, const GridRegion& grid,
                          const std::vector<Real>& side_values,
                          const std::vector<long>& side_zero_cells, long long l,
                          const Rat& delta, const Rat& eps1, const Rat& eps,
                          int c_degree_cap, const std::vector<char>& tight_mask = {},
                          const Rat& tight_eps = 0);

LevelOutput run_level(const RealFn& f, const RealFn& g, const BallDomain& G, const Rat& eps,
                      long long l, const LevelOptions& opts = {},
                      const std::vector<Rat>* f_zero_hint = nullptr,
                      const std::vector<Rat>* g_zero_hint = nullptr);

// Zero detection for nonnegative evaluables on a labeled grid: marks cells
// whose refined local minimum vanishes, returning the refined zero points
// (1-D) or cell centers (higher dimension).
std::vector<Rat> detect_nonneg_zeros(GridRegion& region, const RealFn& fn,
                                     double zero_tol = 1e-9);

}  // namespace qr
