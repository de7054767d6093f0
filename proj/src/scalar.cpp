#include "qr/scalar.hpp"

#include <algorithm>
#include <cmath>

namespace qr {

Real to_real(const Rat& q) { return Real(q); }

double to_double(const Rat& q) { return q.convert_to<double>(); }

Rat exact_rat(const Real& x) {
  if (x == 0) return Rat(0);
  // x = z * 2^e exactly (binary floats are dyadic rationals)
  mpz_t z;
  mpz_init(z);
  mpfr_exp_t e = mpfr_get_z_2exp(z, x.backend().data());
  Int num(z);
  mpz_clear(z);
  Rat r(num);
  if (e >= 0) {
    r *= Rat(Int(1) << static_cast<unsigned>(e));
  } else {
    r /= Rat(Int(1) << static_cast<unsigned>(-e));
  }
  return r;
}

Rat exact_rat(double x) { return exact_rat(Real(x)); }

Rat dyadic_round(const Real& x, unsigned bits) {
  if (x == 0) return Rat(0);
  Real ax = abs(x);
  long e = static_cast<long>(mpfr_get_exp(ax.backend().data()));  // 2^(e-1) <= ax < 2^e
  long shift = static_cast<long>(bits) - e;
  Real scaled = x;
  if (shift >= 0)
    scaled = x * pow(Real(2), shift);
  else
    scaled = x / pow(Real(2), -shift);
  Real r = round(scaled);
  Rat m = exact_rat(r);
  if (shift >= 0)
    m /= Rat(Int(1) << static_cast<unsigned>(shift));
  else
    m *= Rat(Int(1) << static_cast<unsigned>(-shift));
  return m;
}

Real pi_real() {
  static const Real pi = []() {
    Real p;
    mpfr_const_pi(p.backend().data(), MPFR_RNDN);
    return p;
  }();
  return pi;
}

std::string rat_to_string(const Rat& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

Rat rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Int num(s.substr(0, slash));
    Int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("rational with zero denominator: " + s);
    return Rat(num, den);
  }
  auto dot = s.find('.');
  auto epos = s.find_first_of("eE");
  if (dot == std::string::npos && epos == std::string::npos) return Rat(Int(s));
  // decimal literal: sign, integer part, fraction part, optional exponent
  std::string body = s;
  long exp10 = 0;
  if (epos != std::string::npos) {
    exp10 = std::stol(s.substr(epos + 1));
    body = s.substr(0, epos);
    dot = body.find('.');
  }
  std::string digits = body;
  long frac_len = 0;
  if (dot != std::string::npos) {
    frac_len = static_cast<long>(body.size() - dot - 1);
    digits = body.substr(0, dot) + body.substr(dot + 1);
  }
  if (digits.empty() || digits == "-" || digits == "+")
    throw std::invalid_argument("bad numeric literal: " + s);
  Rat r{Int(digits)};
  long e = exp10 - frac_len;
  Int p10 = pow(Int(10), static_cast<unsigned>(std::abs(e)));
  if (e >= 0)
    r *= Rat(p10);
  else
    r /= Rat(p10);
  return r;
}

Scalar Scalar::operator-() const {
  if (exact()) return Scalar(Rat(-rat()));
  return Scalar(Real(-real()));
}

namespace {
template <class F, class G>
Scalar combine(const Scalar& a, const Scalar& b, F exact_op, G real_op) {
  if (a.exact() && b.exact()) return Scalar(exact_op(a.rat(), b.rat()));
  return Scalar(real_op(a.as_real(), b.as_real()));
}
}  // namespace

Scalar& Scalar::operator+=(const Scalar& o) {
  *this = combine(*this, o, [](const Rat& x, const Rat& y) { return Rat(x + y); },
                  [](const Real& x, const Real& y) { return Real(x + y); });
  return *this;
}
Scalar& Scalar::operator-=(const Scalar& o) {
  *this = combine(*this, o, [](const Rat& x, const Rat& y) { return Rat(x - y); },
                  [](const Real& x, const Real& y) { return Real(x - y); });
  return *this;
}
Scalar& Scalar::operator*=(const Scalar& o) {
  *this = combine(*this, o, [](const Rat& x, const Rat& y) { return Rat(x * y); },
                  [](const Real& x, const Real& y) { return Real(x * y); });
  return *this;
}
Scalar& Scalar::operator/=(const Scalar& o) {
  if (o.is_zero()) throw std::domain_error("Scalar division by zero");
  *this = combine(*this, o, [](const Rat& x, const Rat& y) { return Rat(x / y); },
                  [](const Real& x, const Real& y) { return Real(x / y); });
  return *this;
}

int Scalar::sign() const {
  if (exact()) return rat().sign();
  const Real& x = real();
  return x > 0 ? 1 : (x < 0 ? -1 : 0);
}

std::string Scalar::str() const {
  if (exact()) return rat_to_string(rat());
  return real().str(40);
}

RealPoint to_real(const RatPoint& p) {
  RealPoint out(p.size());
  for (size_t i = 0; i < p.size(); ++i) out[i] = to_real(p[i]);
  return out;
}

}  // namespace qr
