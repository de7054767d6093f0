#pragma once

#include "qr/scalar.hpp"

#include <stdexcept>
#include <vector>

namespace qr {

// Axis-aligned closed box, exact endpoints.
struct BoxDomain {
  std::vector<std::pair<Rat, Rat>> axes;  // [a_i, b_i], a_i < b_i

  BoxDomain() = default;
  explicit BoxDomain(std::vector<std::pair<Rat, Rat>> ax) : axes(std::move(ax)) {
    for (auto& [a, b] : axes)
      if (!(a < b)) throw std::invalid_argument("BoxDomain: need a_i < b_i");
  }
  static BoxDomain interval(const Rat& a, const Rat& b) { return BoxDomain({{a, b}}); }

  int dim() const { return static_cast<int>(axes.size()); }

  bool contains(const RatPoint& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < axes[i].first || x[i] > axes[i].second) return false;
    return true;
  }

  // Uniformly scaled copy about the center (factor > 0).
  BoxDomain scaled(const Rat& factor) const {
    BoxDomain out = *this;
    for (auto& [a, b] : out.axes) {
      Rat c = (a + b) / 2, r = (b - a) / 2 * factor;
      a = c - r;
      b = c + r;
    }
    return out;
  }
};

// Tensor-product uniform grid with `per_axis` points per axis, endpoints
// included.  Used both for fitting samples and verification sweeps.
std::vector<RatPoint> uniform_grid(const BoxDomain& box, int per_axis);

}  // namespace qr
