#pragma once

#include "qr/box.hpp"
#include "qr/realfn.hpp"

#include <cstdint>
#include <vector>

namespace qr {

struct BallDomain {
  RatPoint center;
  Rat radius;

  BallDomain() = default;
  BallDomain(RatPoint c, Rat r) : center(std::move(c)), radius(std::move(r)) {
    if (radius <= 0) throw std::invalid_argument("BallDomain: radius must be positive");
  }
  int dim() const { return static_cast<int>(center.size()); }
  BoxDomain enclosing_box() const {
    std::vector<std::pair<Rat, Rat>> axes;
    for (const auto& c : center) axes.emplace_back(c - radius, c + radius);
    return BoxDomain(std::move(axes));
  }
  bool contains(const RatPoint& x) const {
    Rat d2(0);
    for (int i = 0; i < dim(); ++i) d2 += (x[i] - center[i]) * (x[i] - center[i]);
    return d2 < radius * radius;  // open ball
  }
};

enum class CellLabel : std::uint8_t { Positive, Negative, Zero, Outside };

// Cell-centered sampling of the enclosing box of G.  A cell is ZERO when the
// sample value is inside the zero tolerance or a sign change happens across
// one of its faces.
struct GridRegion {
  BoxDomain box;
  Rat h;
  std::vector<int> dims;      // cells per axis
  std::vector<long> strides;
  std::vector<CellLabel> labels;
  std::vector<Real> values;   // sample value at each cell center

  int dim() const { return static_cast<int>(dims.size()); }
  long cell_count() const { return static_cast<long>(labels.size()); }
  RatPoint cell_center(long flat) const;
  long flat_index(const std::vector<int>& idx) const;
  std::vector<int> unflatten(long flat) const;
  // Euclidean distance between cell centers.
  double center_distance(long a, long b) const;
};

GridRegion label_grid(const RealFn& fn, const BallDomain& G, const Rat& h,
                      double zero_tol = -1);

// Cells within Euclidean distance rho of any zero cell (the grid realization
// of a constant-radius tubular neighborhood).
std::vector<char> dilate_zero_set(const GridRegion& region, const std::vector<long>& zero_cells,
                                  double rho);

std::vector<long> zero_cells_of(const GridRegion& region);

}  // namespace qr
