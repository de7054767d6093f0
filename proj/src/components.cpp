#include "qr/components.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace qr {

namespace {

struct UnionFind {
  std::vector<long> parent, rank_;
  explicit UnionFind(long n) : parent(n), rank_(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
  long find(long x) {
    long root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      long next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  }
  void unite(long a, long b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }
};

bool is_region_cell(CellLabel l) {
  return l == CellLabel::Positive || l == CellLabel::Negative;
}

}  // namespace

Components components(const GridRegion& region) {
  long total = region.cell_count();
  UnionFind uf(total);
  int n = region.dim();
  for (long f = 0; f < total; ++f) {
    if (!is_region_cell(region.labels[f])) continue;
    auto idx = region.unflatten(f);
    for (int i = 0; i < n; ++i) {
      if (idx[i] + 1 >= region.dims[i]) continue;
      long g = f + region.strides[i];
      if (is_region_cell(region.labels[g])) uf.unite(f, g);
    }
  }
  Components out;
  out.comp_of_cell.assign(total, -1);
  std::vector<long> root_order;  // smallest cell index per component, in order
  std::vector<int> root_to_comp(total, -1);
  for (long f = 0; f < total; ++f) {
    if (!is_region_cell(region.labels[f])) continue;
    long r = uf.find(f);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = static_cast<int>(root_order.size());
      root_order.push_back(r);
      out.cells.emplace_back();
    }
    int c = root_to_comp[r];
    out.comp_of_cell[f] = c;
    out.cells[c].push_back(f);
  }
  return out;
}

namespace {

// Number of connected pieces of `mask` cells (face adjacency).
int count_subcomponents(const GridRegion& region, const std::vector<long>& cells,
                        const std::vector<char>& excluded) {
  if (cells.empty()) return 0;
  std::vector<long> keep;
  for (long f : cells)
    if (!excluded[f]) keep.push_back(f);
  if (keep.empty()) return 0;
  UnionFind uf(region.cell_count());
  std::vector<char> mine(region.cell_count(), 0);
  for (long f : keep) mine[f] = 1;
  int n = region.dim();
  for (long f : keep) {
    auto idx = region.unflatten(f);
    for (int i = 0; i < n; ++i) {
      if (idx[i] + 1 >= region.dims[i]) continue;
      long g = f + region.strides[i];
      if (mine[g]) uf.unite(f, g);
    }
  }
  std::vector<long> roots;
  for (long f : keep) roots.push_back(uf.find(f));
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return static_cast<int>(roots.size());
}

}  // namespace

TubularInfo tubular_radius(const GridRegion& fg_region, const Components& A,
                           const BallDomain& G, const Real& eps) {
  TubularInfo info;
  info.zero_cells = zero_cells_of(fg_region);
  if (info.zero_cells.empty()) {
    info.rho = 0;  // empty zero set: empty tube by convention
    info.in_tube.assign(fg_region.cell_count(), 0);
    return info;
  }
  double h = to_double(fg_region.h);
  double rho = to_double(G.radius) / 4;
  while (rho >= h) {
    auto tube = dilate_zero_set(fg_region, info.zero_cells, rho);
    bool sup_ok = true;
    for (long f = 0; f < fg_region.cell_count(); ++f) {
      if (!tube[f] || fg_region.labels[f] == CellLabel::Outside) continue;
      if (abs(fg_region.values[f]) >= eps) {
        sup_ok = false;
        break;
      }
    }
    if (sup_ok) {
      bool comp_ok = true;
      for (const auto& cells : A.cells)
        if (count_subcomponents(fg_region, cells, tube) != 1) {
          comp_ok = false;
          break;
        }
      if (comp_ok) {
        info.rho = rho;
        info.in_tube = std::move(tube);
        return info;
      }
    }
    rho /= 2;
  }
  std::ostringstream msg;
  msg << "tubular_radius: no radius >= h=" << h
      << " satisfies the sup bound and the unique-core condition; grid too coarse, "
         "decrease h (zero features closer than ~2h cannot be separated)";
  throw GridError(msg.str());
}

std::vector<int> boundary_components_of(const GridRegion& region, const Components& comps) {
  int n = region.dim();
  std::vector<int> hits;
  for (long f = 0; f < region.cell_count(); ++f) {
    int c = comps.comp_of_cell[f];
    if (c < 0) continue;
    auto idx = region.unflatten(f);
    bool at_boundary = false;
    for (int i = 0; i < n && !at_boundary; ++i) {
      if (idx[i] == 0 || idx[i] + 1 == region.dims[i]) at_boundary = true;
      if (!at_boundary) {
        for (int d : {-1, 1}) {
          long g = f + d * region.strides[i];
          if (region.labels[g] == CellLabel::Outside) {
            at_boundary = true;
            break;
          }
        }
      }
    }
    if (at_boundary && std::find(hits.begin(), hits.end(), c) == hits.end()) hits.push_back(c);
  }
  if (hits.empty()) throw MatchError("boundary_components_of: no component meets the boundary");
  if (n >= 2 && hits.size() != 1) {
    std::ostringstream msg;
    msg << "boundary_components_of: expected exactly one boundary component, found "
        << hits.size();
    throw MatchError(msg.str());
  }
  return hits;
}

ComponentMap match_components(const GridRegion& fg_region, const Components& A,
                              const GridRegion& pq_region, const Components& B,
                              const TubularInfo& tube) {
  if (fg_region.cell_count() != pq_region.cell_count() || fg_region.h != pq_region.h)
    throw std::invalid_argument("match_components: regions must share the grid");
  ComponentMap out;
  out.A = A;
  out.B = B;
  out.rho = tube.rho;
  std::vector<char> no_tube(fg_region.cell_count(), 0);
  const std::vector<char>& in_tube = tube.in_tube.empty() ? no_tube : tube.in_tube;

  std::vector<int> b_of_a(A.count(), -1);
  std::vector<int> a_of_b(B.count(), -1);
  for (int a = 0; a < A.count(); ++a) {
    int b_match = -1;
    for (long f : A.cells[a]) {
      if (in_tube[f]) continue;  // core cells only
      int b = B.comp_of_cell[f];
      if (b < 0) {
        std::ostringstream msg;
        msg << "match_components: core cell of A-component " << a
            << " lands on the PQ zero set; approximation too loose, retry with tighter "
               "precision";
        throw MatchError(msg.str());
      }
      if (b_match < 0) b_match = b;
      if (b_match != b) {
        std::ostringstream msg;
        msg << "match_components: core of A-component " << a
            << " touches two PQ components; approximation too loose";
        throw MatchError(msg.str());
      }
    }
    if (b_match < 0) continue;  // component swallowed by the tube: unmatched
    if (a_of_b[b_match] >= 0) {
      std::ostringstream msg;
      msg << "match_components: injectivity violated, B-component " << b_match
          << " claimed by A-components " << a_of_b[b_match] << " and " << a;
      throw MatchError(msg.str());
    }
    a_of_b[b_match] = a;
    b_of_a[a] = b_match;
    // coverage A subset of B union tube
    for (long f : A.cells[a]) {
      if (in_tube[f]) continue;
      if (B.comp_of_cell[f] != b_match) {
        std::ostringstream msg;
        msg << "match_components: coverage violation for A-component " << a
            << " (cell outside both the matched B-component and the tube); epsilon too "
               "large or approximation too loose";
        throw MatchError(msg.str());
      }
    }
    out.matching.emplace_back(a, b_match);
  }
  for (int b = 0; b < B.count(); ++b)
    if (a_of_b[b] < 0) out.unmatched_B.push_back(b);
  out.boundary_components = boundary_components_of(pq_region, B);
  return out;
}

nlohmann::json ComponentMap::to_json() const {
  nlohmann::json j;
  j["A_count"] = A.count();
  j["B_count"] = B.count();
  j["rho"] = rho;
  j["boundary_components"] = boundary_components;
  j["matching"] = matching;
  j["unmatched_B"] = unmatched_B;
  nlohmann::json asz = nlohmann::json::array(), bsz = nlohmann::json::array();
  for (const auto& c : A.cells) asz.push_back(c.size());
  for (const auto& c : B.cells) bsz.push_back(c.size());
  j["A_sizes"] = std::move(asz);
  j["B_sizes"] = std::move(bsz);
  return j;
}

}  // namespace qr
