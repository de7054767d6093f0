// Smoothness bookkeeping.  A CkWitness pairs a nonnegative function v with
// the root witness v^{1/l}; certification is empirical: finite-difference
// partials of the root up to order k are swept over a grid and adjacent
// values must not jump by more than jump_tol.

#pragma once

#include "qr/box.hpp"
#include "qr/realfn.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qr {

struct FdCertificate {
  int order = 0;       // highest derivative order checked
  double h = 1e-3;     // FD/grid step
  double jump_tol = 0; // allowed jump between adjacent grid points
  double max_jump = 0;
  double max_zero_value = 0;  // largest |derivative| seen at zero-set samples
  bool pass = false;

  nlohmann::json to_json() const;
};

struct CkWitness {
  RealFn v;      // nonnegative on the domain
  RealFn root;   // root^l = v
  int k = 1;
  long long l = 1;
  BoxDomain domain;

  // Spot check of root(x)^l == v(x) on `samples` points.
  bool roundtrip_ok(int samples = 64, double rel_tol = 1e-10) const;
};

// Per-component sign data for reconstructing a signed function from |f|.
// sign_at must be locally constant off the zero set; zero_samples are points
// of the zero set used by the certification sweep.
struct SignField {
  std::function<int(const RealPoint&)> sign_at;
  std::vector<RealPoint> zero_samples;
};

// Lemma-style descent combinators.  All inputs must share domain, k and the
// exponent 2kl for integers k >= 1, l >= 1; outputs carry exponent l.
CkWitness descent_sum(const std::vector<CkWitness>& ws);
CkWitness descent_prod_over_sum(const CkWitness& w1, const CkWitness& w2);
CkWitness descent_sq_over_sum(const CkWitness& w1, const CkWitness& w2);

struct SignedFunction {
  RealFn fn;  // sign(x) * v(x)
  FdCertificate certificate;
};

struct SymmetrizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rebuilds the signed function g = sign * v from a witness with l >= k+1 and
// certifies C^k by FD sweeps: derivative jumps bounded and derivatives
// vanishing on the zero set.  Throws SymmetrizeError on l < k+1 or when the
// sign field is discontinuous off the zero set.
SignedFunction symmetrize(const CkWitness& w, const SignField& signs,
                          double h = 1e-3);

// FD certification of fn over its domain: partial derivatives up to order k
// via nested central differences on an h-grid; adjacent-point jumps must stay
// below jump_tol (default 10*h) and |derivative| <= jump_tol at zero samples.
FdCertificate certify_ck(const RealFn& fn, const BoxDomain& domain, int k, double h,
                         const std::vector<RealPoint>& zero_samples = {},
                         double jump_tol = -1);

}  // namespace qr
