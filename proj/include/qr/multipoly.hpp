// Exact-coefficient multivariate polynomials.
//
// Coefficients are always exact rationals.  Float-mode coefficients produced
// by fitting are binary floats, hence dyadic rationals, so storing them
// exactly loses nothing; "float mode" is an evaluation/serialization choice,
// not a storage one.

#pragma once

#include "qr/scalar.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qr {

using ExpVec = std::vector<std::uint32_t>;

class MultiPoly {
 public:
  MultiPoly() : nvars_(1) {}
  explicit MultiPoly(int nvars) : nvars_(nvars) {}

  static MultiPoly constant(int nvars, const Rat& c);
  static MultiPoly variable(int nvars, int i);  // x_{i+1}
  // Univariate from dense ascending coefficients.
  static MultiPoly from_coeffs(std::span<const Rat> coeffs);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  long degree() const;  // max total degree; zero polynomial -> -1
  std::size_t term_count() const { return terms_.size(); }
  const std::map<ExpVec, Rat>& terms() const { return terms_; }

  void set_coeff(const ExpVec& e, const Rat& c);
  const Rat* coeff(const ExpVec& e) const;

  MultiPoly& operator+=(const MultiPoly& o);
  MultiPoly& operator-=(const MultiPoly& o);
  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
  MultiPoly operator-() const;
  MultiPoly scaled(const Rat& c) const;
  MultiPoly pow(unsigned e) const;  // repeated squaring
  bool operator==(const MultiPoly& o) const {
    return nvars_ == o.nvars_ && terms_ == o.terms_;
  }

  MultiPoly derivative(int var) const;

  Rat operator()(const RatPoint& x) const;
  Real operator()(const RealPoint& x) const;
  double eval_double(std::span<const double> x) const;

  // Sum of |coefficients|; with |x_i| <= r and r >= 1 this bounds |p(x)| by
  // height() * r^degree.
  Rat height() const;

  nlohmann::json to_json(bool decimal = false) const;
  static MultiPoly from_json(const nlohmann::json& j);
  std::string str() const;

 private:
  int nvars_;
  std::map<ExpVec, Rat> terms_;  // exponent vector -> nonzero coefficient
};

// sign(p(x))^e and e*log|p(x)| without ever forming p(x)^e.  The log
// magnitude is exact -inf (represented by Real -inf) when p(x) = 0.
struct PowEval {
  int sign;            // in {-1, 0, +1}
  Real log_magnitude;  // natural log
};
PowEval pow_eval_stable(const MultiPoly& p, const RealPoint& x, unsigned long e);
PowEval pow_eval_stable(const MultiPoly& p, const RatPoint& x, unsigned long e);

}  // namespace qr
