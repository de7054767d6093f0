// Polynomial approximation engines: dense least-squares fitting on sample
// sets (the workhorse behind every "approximate ... by a polynomial" step)
// and the strictly-positive variant built from a fitted square root.

#pragma once

#include "qr/box.hpp"
#include "qr/multipoly.hpp"
#include "qr/realfn.hpp"

#include <stdexcept>
#include <utility>
#include <vector>

namespace qr {

struct FitResult {
  MultiPoly poly;
  double achieved_sup = 0;  // sup |poly - value| over the samples
  int degree_used = 0;
};

// Raised when the escalation ladder hits its cap before reaching the target.
// Carries the best fit found so callers may still use it (e.g. when only
// sign conditions matter, not the sup target).
struct DegreeExhausted : std::runtime_error {
  DegreeExhausted(std::string msg, FitResult best_fit)
      : std::runtime_error(std::move(msg)), best(std::move(best_fit)) {}
  FitResult best;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Sample = std::pair<RatPoint, Real>;

// Least-squares fit over the samples, total degree escalating
// 4, 8, 16, ... up to max_degree; returns the first (lowest-degree) fit whose
// sup error over the samples meets target_sup_error, keeping the best seen so
// the reported error is non-increasing in max_degree.  Throws DegreeExhausted
// if the cap is reached first.
FitResult approx_sw(const std::vector<Sample>& samples, const BoxDomain& domain,
                    int max_degree, const Real& target_sup_error);

// Convenience: sample `fn` on a uniform tensor grid of the domain
// (>= 4*(degree+1) points per axis) and fit.
FitResult approx_sw_fn(const RealFn& fn, const BoxDomain& domain, int max_degree,
                       const Real& target_sup_error);

struct PositiveFit {
  MultiPoly poly;  // fbar^2 + eta, strictly positive on all of R^n
  MultiPoly fbar;
  Rat eta;
  double achieved_sup = 0;
};

// fbar^2 + eta with fbar a fitted square root of fn and eta > 0; strictly
// positive everywhere, within tol of fn on the sample grid.  Requires
// fn > 0 on the grid.
PositiveFit approx_positive(const RealFn& fn, const BoxDomain& domain, const Real& tol,
                            int max_degree = 64);

// Same construction for targets that may touch zero (the fitted function is
// then only tracked where it is positive; eta keeps the result positive).
PositiveFit approx_positive_relaxed(const RealFn& fn, const BoxDomain& domain,
                                    const Real& tol, int max_degree = 64);

// Number of grid points per axis used when fitting at total degree d.
int fit_points_per_axis(int dim, int degree);

}  // namespace qr
