// Core numeric types.
//
// Two coefficient/value representations are used throughout:
//   Rat  - exact GMP rational; every ring operation is exact.
//   Real - 512-bit MPFR float.  The exponent range of MPFR is wide enough
//          (|exp| < 2^62) that powers like P(x)^256 with |P(x)| ~ 1e-3
//          evaluate without under/overflow, which is what the rest of the
//          code relies on instead of hand-rolled log-domain arithmetic.
//
// Scalar is the boundary type: a tagged value that is either exact or
// extended-precision, matching the per-run "exact | float" mode.

#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qr {

namespace mp = boost::multiprecision;

using Int = mp::mpz_int;
using Rat = mp::mpq_rational;

// 154 decimal digits ~ 512 bits of mantissa.
using Real = mp::number<mp::mpfr_float_backend<154>, mp::et_off>;

inline constexpr int kRealBits = 512;

Real to_real(const Rat& q);
double to_double(const Rat& q);

// Exact conversion: every finite binary float is a (dyadic) rational.
Rat exact_rat(const Real& x);
Rat exact_rat(double x);

// Nearest rational with denominator a power of two, mantissa cut to `bits`
// significant bits.  Used to turn fitted float coefficients into small exact
// coefficients.
Rat dyadic_round(const Real& x, unsigned bits);

Real pi_real();

std::string rat_to_string(const Rat& q);   // "num/den" (or "num" if den==1)
Rat rat_from_string(const std::string& s); // accepts "a/b", integers, decimals

struct Scalar {
  std::variant<Rat, Real> v;

  Scalar() : v(Rat(0)) {}
  Scalar(Rat q) : v(std::move(q)) {}
  Scalar(Real x) : v(std::move(x)) {}
  explicit Scalar(long n) : v(Rat(n)) {}

  bool exact() const { return std::holds_alternative<Rat>(v); }
  const Rat& rat() const { return std::get<Rat>(v); }
  const Real& real() const { return std::get<Real>(v); }

  Real as_real() const { return exact() ? to_real(rat()) : real(); }
  // In float mode this is the exact value of the stored binary float.
  Rat as_rat() const { return exact() ? rat() : exact_rat(real()); }

  Scalar operator-() const;
  Scalar& operator+=(const Scalar& o);
  Scalar& operator-=(const Scalar& o);
  Scalar& operator*=(const Scalar& o);
  Scalar& operator/=(const Scalar& o);

  friend Scalar operator+(Scalar a, const Scalar& b) { return a += b; }
  friend Scalar operator-(Scalar a, const Scalar& b) { return a -= b; }
  friend Scalar operator*(Scalar a, const Scalar& b) { return a *= b; }
  friend Scalar operator/(Scalar a, const Scalar& b) { return a /= b; }

  int sign() const;
  bool is_zero() const { return sign() == 0; }
  std::string str() const;
};

// Point in R^n, both flavors.
using RatPoint = std::vector<Rat>;
using RealPoint = std::vector<Real>;

RealPoint to_real(const RatPoint& p);

}  // namespace qr
