#pragma once

#include "qr/scalar.hpp"

#include <functional>
#include <span>
#include <utility>

namespace qr {

// Type-erased evaluable R^n -> R in extended precision.  The bookkeeping
// layers (witnesses, v-chain, level inputs) are built from these.
struct RealFn {
  int nvars = 1;
  std::function<Real(std::span<const Real>)> f;

  Real operator()(std::span<const Real> x) const { return f(x); }
  Real operator()(const RealPoint& x) const { return f(std::span<const Real>(x)); }
  Real at1(const Real& x) const {
    Real buf[1] = {x};
    return f(std::span<const Real>(buf, 1));
  }
};

inline RealFn constant_fn(int nvars, Real c) {
  return {nvars, [c = std::move(c)](std::span<const Real>) { return c; }};
}

}  // namespace qr
