#include "qr/grid.hpp"

#include "qr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qr {

RatPoint GridRegion::cell_center(long flat) const {
  std::vector<int> idx = unflatten(flat);
  RatPoint x(dim());
  for (int i = 0; i < dim(); ++i)
    x[i] = box.axes[i].first + h * idx[i] + h / 2;
  return x;
}

long GridRegion::flat_index(const std::vector<int>& idx) const {
  long f = 0;
  for (int i = 0; i < dim(); ++i) f += strides[i] * idx[i];
  return f;
}

std::vector<int> GridRegion::unflatten(long flat) const {
  std::vector<int> idx(dim());
  for (int i = 0; i < dim(); ++i) {
    idx[i] = static_cast<int>(flat / strides[i]);
    flat %= strides[i];
  }
  return idx;
}

double GridRegion::center_distance(long a, long b) const {
  auto ia = unflatten(a), ib = unflatten(b);
  double hh = to_double(h), acc = 0;
  for (int i = 0; i < dim(); ++i) {
    double d = hh * (ia[i] - ib[i]);
    acc += d * d;
  }
  return std::sqrt(acc);
}

GridRegion label_grid(const RealFn& fn, const BallDomain& G, const Rat& h,
                      double zero_tol) {
  if (h <= 0) throw std::invalid_argument("label_grid: h must be positive");
  GridRegion region;
  region.box = G.enclosing_box();
  region.h = h;
  int n = G.dim();
  region.dims.resize(n);
  for (int i = 0; i < n; ++i) {
    Rat len = region.box.axes[i].second - region.box.axes[i].first;
    Rat cells = len / h;
    long c = static_cast<long>(to_double(cells)) + ((cells == static_cast<long>(to_double(cells))) ? 0 : 1);
    region.dims[i] = static_cast<int>(std::max<long>(c, 1));
  }
  region.strides.assign(n, 1);
  for (int i = n - 2; i >= 0; --i) region.strides[i] = region.strides[i + 1] * region.dims[i + 1];
  long total = region.strides[0] * region.dims[0];
  region.labels.assign(total, CellLabel::Outside);
  region.values.assign(total, Real(0));

  std::vector<char> inside(total, 0);
  parallel_for(static_cast<std::size_t>(total), [&](std::size_t f) {
    long flat = static_cast<long>(f);
    RatPoint x = region.cell_center(flat);
    if (!G.contains(x)) return;
    inside[flat] = 1;
    region.values[flat] = fn(to_real(x));
  });

  // adaptive zero tolerance from the value scale over G
  if (zero_tol < 0) {
    Real scale(0);
    for (long f = 0; f < total; ++f)
      if (inside[f]) scale = std::max(scale, abs(region.values[f]));
    zero_tol = std::max(1e-12, scale.convert_to<double>() * 1e-9);
  }

  for (long f = 0; f < total; ++f) {
    if (!inside[f]) continue;
    const Real& v = region.values[f];
    if (abs(v) <= zero_tol)
      region.labels[f] = CellLabel::Zero;
    else
      region.labels[f] = v > 0 ? CellLabel::Positive : CellLabel::Negative;
  }
  // sign changes across a face turn both cells ZERO
  std::vector<long> flips;
  for (long f = 0; f < total; ++f) {
    if (region.labels[f] == CellLabel::Outside || region.labels[f] == CellLabel::Zero) continue;
    auto idx = region.unflatten(f);
    for (int i = 0; i < n; ++i) {
      if (idx[i] + 1 >= region.dims[i]) continue;
      long g = f + region.strides[i];
      if (region.labels[g] == CellLabel::Outside || region.labels[g] == CellLabel::Zero) continue;
      if ((region.labels[f] == CellLabel::Positive) != (region.labels[g] == CellLabel::Positive)) {
        flips.push_back(f);
        flips.push_back(g);
      }
    }
  }
  for (long f : flips) region.labels[f] = CellLabel::Zero;
  return region;
}

std::vector<long> zero_cells_of(const GridRegion& region) {
  std::vector<long> out;
  for (long f = 0; f < region.cell_count(); ++f)
    if (region.labels[f] == CellLabel::Zero) out.push_back(f);
  return out;
}

std::vector<char> dilate_zero_set(const GridRegion& region, const std::vector<long>& zero_cells,
                                  double rho) {
  long total = region.cell_count();
  std::vector<char> in_tube(total, 0);
  if (zero_cells.empty() || rho <= 0) return in_tube;
  int n = region.dim();
  double hh = to_double(region.h);
  long reach = static_cast<long>(std::floor(rho / hh)) + 1;
  for (long z : zero_cells) {
    auto zi = region.unflatten(z);
    // box sweep around the zero cell, keep the Euclidean ball
    std::vector<long> lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      lo[i] = std::max<long>(0, zi[i] - reach);
      hi[i] = std::min<long>(region.dims[i] - 1, zi[i] + reach);
    }
    std::vector<long> cur(lo.begin(), lo.end());
    while (true) {
      double d2 = 0;
      for (int i = 0; i < n; ++i) {
        double d = hh * (cur[i] - zi[i]);
        d2 += d * d;
      }
      if (d2 <= rho * rho) {
        long f = 0;
        for (int i = 0; i < n; ++i) f += region.strides[i] * cur[i];
        in_tube[f] = 1;
      }
      int i = n - 1;
      while (i >= 0 && ++cur[i] > hi[i]) {
        cur[i] = lo[i];
        --i;
      }
      if (i < 0) break;
    }
  }
  return in_tube;
}

}  // namespace qr
