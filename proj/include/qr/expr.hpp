// Expression AST and recursive-descent parser for user-supplied map
// components: variables x1..xn, rational literals, pi, arithmetic, integer
// powers, sqrt/sin/cos/exp/abs.

#pragma once

#include "qr/realfn.hpp"
#include "qr/scalar.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace qr {

struct ParseError : std::runtime_error {
  int position;  // 0-based column in the source text
  ParseError(const std::string& msg, int pos)
      : std::runtime_error(msg + " (at column " + std::to_string(pos + 1) + ")"),
        position(pos) {}
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Num, Pi, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Sin, Cos, Exp, Abs };
  Kind kind = Kind::Num;
  Rat num;
  int var = 0;       // Var: 0-based index
  long exponent = 1; // Pow
  ExprPtr a, b;

  Real eval(std::span<const Real> x) const;
  std::string str() const;
  int max_var() const;  // largest variable index used, -1 if none
  bool equals(const Expr& other) const;
};

// Throws ParseError with the offending column; checks variables fit nvars
// when nvars >= 0.
ExprPtr parse_expr(const std::string& text, int nvars = -1);

RealFn expr_fn(const ExprPtr& e, int nvars);

}  // namespace qr
