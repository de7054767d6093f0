#pragma once

#include "qr/realfn.hpp"
#include "qr/scalar.hpp"

#include <stdexcept>
#include <vector>

namespace qr {

// Semialgebraic cutoff damping a finite singular set:
//   beta(x) = clamp(dist(x, Sigma)^2 / r^2, 0, 1)
// so beta^{-1}(0) = Sigma and beta = 1 outside the r-neighborhood.  The
// squared distance keeps beta semialgebraic without square roots.
struct UrysohnFactor {
  std::vector<RatPoint> sigma;
  Rat r = 1;
  int exponent = 1;  // N; the damping factor used downstream is beta^N

  int dim() const { return sigma.empty() ? 0 : static_cast<int>(sigma[0].size()); }
  Real beta(const RealPoint& x) const;       // in [0, 1]
  Real beta_pow(const RealPoint& x) const;   // beta^N
  RealFn as_fn(int nvars) const;
};

struct UrysohnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds the factor with r < dist(Sigma, M)/2.  Sigma intersecting M is a
// fatal input error.  N starts at 1; callers bump it when their damped
// function fails its continuity check.
UrysohnFactor urysohn(const std::vector<RatPoint>& sigma, const std::vector<RatPoint>& M);

}  // namespace qr
