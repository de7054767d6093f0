// Connected components of the non-zero cells (union-find over face
// adjacency), tubular radius selection, and the A-to-B component matching.

#pragma once

#include "qr/grid.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace qr {

struct Components {
  std::vector<int> comp_of_cell;          // -1 for ZERO / OUTSIDE cells
  std::vector<std::vector<long>> cells;   // per component, ordered by smallest cell index
  int count() const { return static_cast<int>(cells.size()); }
};

Components components(const GridRegion& region);

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TubularInfo {
  double rho = 0;
  std::vector<char> in_tube;   // per cell
  std::vector<long> zero_cells;
  bool empty() const { return zero_cells.empty(); }
};

// Radius search by halving from radius(G)/4: (i) sup |fg| over the tube
// cells < eps, (ii) every component of the complement of the zero set
// contains exactly one component of G minus the closed tube.  Throws
// GridError (prescribing a finer h) when no rho >= h works.
TubularInfo tubular_radius(const GridRegion& fg_region, const Components& A,
                           const BallDomain& G, const Real& eps);

struct ComponentMap {
  Components A, B;
  std::vector<std::pair<int, int>> matching;  // (A index, B index)
  std::vector<int> unmatched_B;
  double rho = 0;
  // B components whose closure meets the boundary of G.  Exactly one for
  // n >= 2 (the boundary sphere is connected); an interval's boundary is two
  // points, so n = 1 legitimately yields one or two.
  std::vector<int> boundary_components;

  nlohmann::json to_json() const;
};

struct MatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// For every A-component, the unique B-component containing its core
// (A minus the closed tube); verifies injectivity and the cellwise coverage
// A subset of B union tube.  Both regions must share the same grid.
ComponentMap match_components(const GridRegion& fg_region, const Components& A,
                              const GridRegion& pq_region, const Components& B,
                              const TubularInfo& tube);

// Components whose closure meets the boundary of G.  Throws MatchError when
// empty, or when not unique in dimension >= 2.
std::vector<int> boundary_components_of(const GridRegion& region, const Components& comps);

}  // namespace qr
