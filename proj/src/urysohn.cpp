#include "qr/urysohn.hpp"

#include <algorithm>

namespace qr {

Real UrysohnFactor::beta(const RealPoint& x) const {
  if (sigma.empty()) return Real(1);
  Real best;
  bool first = true;
  for (const auto& s : sigma) {
    Real d2 = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      Real d = x[i] - to_real(s[i]);
      d2 += d * d;
    }
    if (first || d2 < best) {
      best = d2;
      first = false;
    }
  }
  Real v = best / to_real(r * r);
  if (v > 1) return Real(1);
  return v;
}

Real UrysohnFactor::beta_pow(const RealPoint& x) const {
  Real b = beta(x);
  if (exponent == 1 || b == 1) return b;
  return pow(b, exponent);
}

RealFn UrysohnFactor::as_fn(int nvars) const {
  UrysohnFactor self = *this;
  return {nvars, [self](std::span<const Real> x) {
            RealPoint p(x.begin(), x.end());
            return self.beta_pow(p);
          }};
}

UrysohnFactor urysohn(const std::vector<RatPoint>& sigma, const std::vector<RatPoint>& M) {
  UrysohnFactor out;
  out.sigma = sigma;
  out.exponent = 1;
  if (sigma.empty()) {
    out.r = 1;
    return out;  // beta identically 1
  }
  if (M.empty()) throw UrysohnError("urysohn: empty target set M");
  Rat best_d2(-1);
  for (const auto& s : sigma)
    for (const auto& m : M) {
      Rat d2(0);
      for (std::size_t i = 0; i < s.size(); ++i) d2 += (s[i] - m[i]) * (s[i] - m[i]);
      if (d2 == 0) throw UrysohnError("urysohn: singular set meets M");
      if (best_d2 < 0 || d2 < best_d2) best_d2 = d2;
    }
  // r < dist(Sigma, M)/2 via a rational bound: r = sqrt(best_d2)/2 rounded down
  Real rr = sqrt(to_real(best_d2)) / 2;
  out.r = dyadic_round(rr * Real("0.999"), 64);
  if (out.r <= 0) throw UrysohnError("urysohn: degenerate separation distance");
  return out;
}

}  // namespace qr
