// Test-side oracles, independent of the library paths they check:
// Richardson-extrapolated finite differences, exact normal-equation least
// squares, flood-fill component counting, and sign-change bisection root
// isolation.

#pragma once

#include "qr/grid.hpp"
#include "qr/realfn.hpp"
#include "qr/scalar.hpp"

#include <functional>
#include <vector>

namespace qr::testing {

// Central differences, recursively per variable, then one Richardson step.
inline Real fd_central(const std::function<Real(const RealPoint&)>& fn, const RealPoint& y,
                       const std::vector<int>& mi, const Real& h) {
  int var = -1;
  for (std::size_t i = 0; i < mi.size(); ++i)
    if (mi[i] > 0) {
      var = static_cast<int>(i);
      break;
    }
  if (var < 0) return fn(y);
  std::vector<int> lower = mi;
  lower[var] -= 1;
  RealPoint yp = y, ym = y;
  yp[var] += h;
  ym[var] -= h;
  return (fd_central(fn, yp, lower, h) - fd_central(fn, ym, lower, h)) / (2 * h);
}

inline Real fd_richardson(const std::function<Real(const RealPoint&)>& fn, const RealPoint& y,
                          const std::vector<int>& mi, const Real& h) {
  Real d1 = fd_central(fn, y, mi, h);
  Real d2 = fd_central(fn, y, mi, h / 2);
  return (4 * d2 - d1) / 3;
}

// Exact least squares for 1-D monomial bases by normal equations over
// rationals (Gaussian elimination).  Small degrees only.
inline std::vector<Rat> normal_equations_fit(const std::vector<std::pair<Rat, Rat>>& samples,
                                             int degree) {
  int n = degree + 1;
  std::vector<std::vector<Rat>> A(n, std::vector<Rat>(n + 1, Rat(0)));
  for (const auto& [x, y] : samples) {
    std::vector<Rat> pows(2 * n - 1);
    pows[0] = 1;
    for (int i = 1; i < 2 * n - 1; ++i) pows[i] = pows[i - 1] * x;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) A[r][c] += pows[r + c];
      A[r][n] += pows[r] * y;
    }
  }
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    for (int r = col; r < n; ++r)
      if (A[r][col] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) throw std::runtime_error("normal_equations_fit: singular system");
    std::swap(A[col], A[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Rat factor = A[r][col] / A[col][col];
      for (int c = col; c <= n; ++c) A[r][c] -= factor * A[col][c];
    }
  }
  std::vector<Rat> coeffs(n);
  for (int r = 0; r < n; ++r) coeffs[r] = A[r][n] / A[r][r];
  return coeffs;
}

// Flood fill over non-zero, non-outside cells (face adjacency).
inline int flood_fill_count(const GridRegion& region) {
  auto is_cell = [&](long f) {
    return region.labels[f] == CellLabel::Positive || region.labels[f] == CellLabel::Negative;
  };
  std::vector<char> seen(region.cell_count(), 0);
  int count = 0;
  for (long start = 0; start < region.cell_count(); ++start) {
    if (!is_cell(start) || seen[start]) continue;
    ++count;
    std::vector<long> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      long f = stack.back();
      stack.pop_back();
      auto idx = region.unflatten(f);
      for (int i = 0; i < region.dim(); ++i)
        for (int d : {-1, 1}) {
          long j = idx[i] + d;
          if (j < 0 || j >= region.dims[i]) continue;
          long g = f + d * region.strides[i];
          if (is_cell(g) && !seen[g]) {
            seen[g] = 1;
            stack.push_back(g);
          }
        }
    }
  }
  return count;
}

// Sign-change bisection roots of a continuous function on [a, b].
inline std::vector<double> bisection_roots(const std::function<double(double)>& fn, double a,
                                           double b, int scan = 4096) {
  std::vector<double> roots;
  double prev = fn(a);
  double step = (b - a) / scan;
  for (int i = 1; i <= scan; ++i) {
    double x = a + i * step;
    double v = fn(x);
    if (prev == 0) roots.push_back(x - step);
    if ((prev < 0 && v > 0) || (prev > 0 && v < 0)) {
      double lo = x - step, hi = x, flo = prev;
      for (int it = 0; it < 200; ++it) {
        double mid = (lo + hi) / 2;
        double fm = fn(mid);
        if ((fm > 0) == (flo > 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back((lo + hi) / 2);
    }
    prev = v;
  }
  return roots;
}

}  // namespace qr::testing
