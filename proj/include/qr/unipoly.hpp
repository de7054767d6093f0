#pragma once

#include "qr/multipoly.hpp"
#include "qr/scalar.hpp"

#include <vector>

#include <json.hpp>

namespace qr {

// Dense univariate polynomial with exact coefficients and a cached
// extended-precision mirror for fast Horner evaluation.  Degrees in the
// thousands occur (powers of the level polynomial factor), which is why the
// sparse MultiPoly map is not used here.
class UniPoly {
 public:
  UniPoly() = default;
  explicit UniPoly(std::vector<Rat> coeffs);  // ascending, trailing zeros trimmed
  static UniPoly from_multipoly(const MultiPoly& p);

  long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
  bool is_zero() const { return coeffs_.empty(); }
  const std::vector<Rat>& coeffs() const { return coeffs_; }

  Rat operator()(const Rat& x) const;
  Real operator()(const Real& x) const;  // cached-coefficient Horner

  UniPoly derivative() const;
  MultiPoly to_multipoly() const { return MultiPoly::from_coeffs(coeffs_); }

  nlohmann::json to_json() const;
  static UniPoly from_json(const nlohmann::json& j);

 private:
  std::vector<Rat> coeffs_;
  std::vector<Real> rcoeffs_;
};

// Polynomial held in the Chebyshev basis of an interval [lo, hi], with exact
// rational coefficients.  Monomial form is numerically useless at the degrees
// the level factorization needs (coefficients ~ 2^degree with cancellation),
// while Clenshaw evaluation of the Chebyshev form is stable at any degree and
// stays exact over rationals.
class ChebPoly {
 public:
  ChebPoly() : lo_(-1), hi_(1) {}
  ChebPoly(Rat lo, Rat hi, std::vector<Rat> cheb_coeffs);

  // Exact basis conversion (use only at small degree).
  static ChebPoly from_unipoly(const UniPoly& p, const Rat& lo, const Rat& hi);

  long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
  const std::vector<Rat>& coeffs() const { return coeffs_; }
  const Rat& lo() const { return lo_; }
  const Rat& hi() const { return hi_; }

  Rat operator()(const Rat& t) const;   // exact Clenshaw
  Real operator()(const Real& t) const;

  nlohmann::json to_json() const;
  static ChebPoly from_json(const nlohmann::json& j);

 private:
  Rat lo_, hi_;
  std::vector<Rat> coeffs_;
  std::vector<Real> rcoeffs_;
  Real rlo_, rhi_;
};

}  // namespace qr
