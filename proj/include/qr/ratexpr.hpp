// Rational expression DAGs over exact polynomials: the stage outputs
// (u-bar, v-bar, alpha-bar, ...) are assembled as shared subexpressions so
// the Pythagorean identities hold structurally and can be tested by exact
// evaluation at rational points.  Large powers stay as Pow nodes (never
// expanded); Compose applies a dense univariate polynomial to a subtree,
// which is how factored positive approximants c(P(x))^2 + eta are carried.

#pragma once

#include "qr/multipoly.hpp"
#include "qr/realfn.hpp"
#include "qr/unipoly.hpp"

#include <map>
#include <memory>
#include <optional>

#include <json.hpp>

namespace qr {

struct RatExpr;
using RatExprPtr = std::shared_ptr<const RatExpr>;

enum class ExprOp { Poly, Const, Add, Sub, Mul, Div, Neg, Pow, Compose };

struct RatExpr {
  ExprOp op = ExprOp::Const;
  int nvars = 1;
  MultiPoly poly;               // Poly
  Rat cval;                     // Const
  RatExprPtr a, b;              // operands
  unsigned long exponent = 1;   // Pow
  ChebPoly comp;                // Compose: comp(a(x))

  static RatExprPtr make_poly(MultiPoly p);
  static RatExprPtr make_const(int nvars, Rat c);
  static RatExprPtr add(RatExprPtr x, RatExprPtr y);
  static RatExprPtr sub(RatExprPtr x, RatExprPtr y);
  static RatExprPtr mul(RatExprPtr x, RatExprPtr y);
  static RatExprPtr div(RatExprPtr x, RatExprPtr y);
  static RatExprPtr neg(RatExprPtr x);
  static RatExprPtr pow(RatExprPtr x, unsigned long e);
  static RatExprPtr compose(ChebPoly c, RatExprPtr inner);

  // Exact evaluation; nullopt when a division by zero occurs.
  std::optional<Rat> eval_rat(const RatPoint& x) const;
  Real eval_real(const RealPoint& x) const;
  RealFn as_realfn() const;

  nlohmann::json to_json() const;
  static RatExprPtr from_json(const nlohmann::json& j);
};

}  // namespace qr
