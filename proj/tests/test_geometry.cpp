#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/components.hpp"
#include "qr/urysohn.hpp"

#include "oracles.hpp"

#include <random>

using namespace qr;

namespace {

BallDomain interval_ball(double r) { return BallDomain({Rat(0)}, exact_rat(r)); }

RealFn fn1(std::function<Real(const Real&)> f) {
  return {1, [f](std::span<const Real> x) { return f(x[0]); }};
}

}  // namespace

TEST_CASE("labeling: constant positive has no zero cells") {
  GridRegion r = label_grid(fn1([](const Real&) { return Real(1); }), interval_ball(1),
                            Rat(1, 10));
  CHECK(zero_cells_of(r).empty());
  CHECK(components(r).count() == 1);
}

TEST_CASE("labeling: x on (-1,1) marks only the cells at the sign change") {
  GridRegion r = label_grid(fn1([](const Real& x) { return x; }), interval_ball(1), Rat(1, 10));
  auto zeros = zero_cells_of(r);
  CHECK(zeros.size() == 2);  // the two cells astride 0
  for (long z : zeros) CHECK(abs(to_real(r.cell_center(z)[0])) <= Real(1) / 10);
  CHECK(components(r).count() == 2);
}

TEST_CASE("labeling: circle zero set forms an annulus of cells (n = 2)") {
  BallDomain G({Rat(0), Rat(0)}, Rat(1));
  RealFn f{2, [](std::span<const Real> x) { return x[0] * x[0] + x[1] * x[1] - Real(1) / 4; }};
  GridRegion r = label_grid(f, G, Rat(1, 40));
  auto zeros = zero_cells_of(r);
  CHECK(!zeros.empty());
  for (long z : zeros) {
    RatPoint c = r.cell_center(z);
    double rad = std::sqrt(to_double(c[0]) * to_double(c[0]) + to_double(c[1]) * to_double(c[1]));
    CHECK(rad == doctest::Approx(0.5).epsilon(0.15));  // within a couple of cells
  }
  CHECK(components(r).count() == 2);  // inside and outside the circle
}

TEST_CASE("components: (x^2 - 1/4) has three on (-1,1)") {
  GridRegion r = label_grid(fn1([](const Real& x) { return x * x - Real(1) / 4; }),
                            interval_ball(1), Rat(1, 100));
  Components c = components(r);
  CHECK(c.count() == 3);
  // boundaries agree with certified roots +-1/2 to within one cell
  auto roots = testing::bisection_roots(
      [](double x) { return x * x - 0.25; }, -1, 1);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(roots[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("union-find count equals flood fill on random labelings") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-1, 1);
  for (int rep = 0; rep < 50; ++rep) {
    // random low-degree polynomial => random sign pattern
    double a = coef(rng), b = coef(rng), c = coef(rng), d = coef(rng);
    GridRegion r = label_grid(fn1([=](const Real& x) {
                                Real acc = Real(a) + Real(b) * x + Real(c) * x * x +
                                           Real(d) * x * x * x;
                                return acc;
                              }),
                              interval_ball(1), Rat(1, 60));
    CHECK(components(r).count() == testing::flood_fill_count(r));
  }
}

TEST_CASE("tubular radius: fg = x^2 with eps = 0.01 gives rho <= 0.1") {
  GridRegion r = label_grid(fn1([](const Real& x) { return x * x; }), interval_ball(1),
                            Rat(1, 200));
  // mark the zero cells around 0 (nonnegative function, no sign change)
  for (long f = 0; f < r.cell_count(); ++f)
    if (r.labels[f] != CellLabel::Outside && abs(r.values[f]) < Real(1) / 100000)
      r.labels[f] = CellLabel::Zero;
  // also the two adjacent cells straddling zero
  for (long f = 0; f + 1 < r.cell_count(); ++f) {
    Real c = to_real(r.cell_center(f)[0]);
    if (abs(c) <= Real(1) / 200) r.labels[f] = CellLabel::Zero;
  }
  Components A = components(r);
  TubularInfo t = tubular_radius(r, A, interval_ball(1), Real("0.01"));
  CHECK(t.rho <= 0.1);  // |x^2| < 0.01 iff |x| < 0.1
  CHECK(t.rho > 0);
}

TEST_CASE("tubular radius: empty zero set is the empty tube") {
  GridRegion r = label_grid(fn1([](const Real&) { return Real(1); }), interval_ball(1),
                            Rat(1, 50));
  Components A = components(r);
  TubularInfo t = tubular_radius(r, A, interval_ball(1), Real("0.5"));
  CHECK(t.rho == 0);
  CHECK(t.zero_cells.empty());
}

TEST_CASE("tubular radius: zeros closer than 2h give a coarse-grid error") {
  // zeros at +-h/4: the sliver between them cannot carry a core component
  double h = 0.01;
  GridRegion r = label_grid(fn1([h](const Real& x) {
                              return (x - Real(h) / 4) * (x + Real(h) / 4);
                            }),
                            interval_ball(1), exact_rat(h));
  Components A = components(r);
  CHECK_THROWS_AS(tubular_radius(r, A, interval_ball(1), Real("0.9")), GridError);
}

TEST_CASE("match_components on the interval oracle example") {
  // fg vanishes at 0; PQ vanishes at +-r
  double rr = 0.05;
  BallDomain G = interval_ball(1);
  GridRegion fg = label_grid(fn1([](const Real& x) { return abs(x); }), G, Rat(1, 200));
  for (long f = 0; f < fg.cell_count(); ++f)
    if (fg.labels[f] != CellLabel::Outside && abs(to_real(fg.cell_center(f)[0])) <= Real(1) / 200)
      fg.labels[f] = CellLabel::Zero;
  Components A = components(fg);
  REQUIRE(A.count() == 2);

  GridRegion pq = label_grid(fn1([rr](const Real& x) { return x * x - Real(rr) * Real(rr); }),
                             G, Rat(1, 200));
  Components B = components(pq);
  REQUIRE(B.count() == 3);

  TubularInfo tube = tubular_radius(fg, A, G, Real("0.2"));
  ComponentMap m = match_components(fg, A, pq, B, tube);
  REQUIRE(m.matching.size() == 2);
  // outer A components match the outer B components; the middle B is free
  CHECK(m.unmatched_B.size() == 1);
  std::vector<long> first_cells = {B.cells[m.matching[0].second][0],
                                   B.cells[m.matching[1].second][0]};
  CHECK(m.unmatched_B[0] == 1);  // middle component in deterministic order
  CHECK(m.boundary_components.size() == 2);  // both interval ends
}

TEST_CASE("matching is injective on random 1-D instances") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(-0.7, 0.7);
  for (int rep = 0; rep < 20; ++rep) {
    // fg with two zeros, pq with the same zeros nudged
    double z1 = pos(rng), z2 = pos(rng);
    if (std::abs(z1 - z2) < 0.2) continue;
    double lo = std::min(z1, z2), hi = std::max(z1, z2);
    BallDomain G = interval_ball(1);
    GridRegion fg = label_grid(
        fn1([lo, hi](const Real& x) { return abs((x - Real(lo)) * (x - Real(hi))); }), G,
        Rat(1, 300));
    for (long f = 0; f < fg.cell_count(); ++f) {
      if (fg.labels[f] == CellLabel::Outside) continue;
      double c = to_double(fg.cell_center(f)[0]);
      if (std::abs(c - lo) <= 1.0 / 300 || std::abs(c - hi) <= 1.0 / 300)
        fg.labels[f] = CellLabel::Zero;
    }
    Components A = components(fg);
    GridRegion pq = label_grid(fn1([lo, hi](const Real& x) {
                                 return (x - Real(lo) - Real("0.003")) *
                                        (x - Real(hi) + Real("0.002"));
                               }),
                               G, Rat(1, 300));
    Components B = components(pq);
    TubularInfo tube;
    try {
      tube = tubular_radius(fg, A, G, Real("0.4"));
    } catch (const GridError&) {
      continue;  // zeros too close to the boundary for this draw
    }
    ComponentMap m;
    try {
      m = match_components(fg, A, pq, B, tube);
    } catch (const MatchError&) {
      continue;
    }
    std::vector<int> seen;
    for (auto& [a, b] : m.matching) {
      CHECK(std::find(seen.begin(), seen.end(), b) == seen.end());
      seen.push_back(b);
    }
  }
}

TEST_CASE("urysohn: empty singular set is the constant 1") {
  UrysohnFactor u = urysohn({}, {{Rat(0)}});
  CHECK(u.exponent == 1);
  CHECK(u.beta({Real(5)}) == Real(1));
}

TEST_CASE("urysohn: single point damping") {
  std::vector<RatPoint> sigma = {{Rat(0), Rat(0)}};
  std::vector<RatPoint> M = {{Rat(1, 2), Rat(0)}, {Rat(0), Rat(3, 4)}};
  UrysohnFactor u = urysohn(sigma, M);
  CHECK(u.r <= Rat(1, 4));
  CHECK(u.beta({Real(0), Real(0)}) == Real(0));
  for (const auto& p : M) CHECK(u.beta(to_real(p)) == Real(1));
  // beta is continuous across the transition (FD jump small)
  Real prev = u.beta({Real("0.001"), Real(0)});
  for (int i = 2; i < 400; ++i) {
    Real x = Real(i) / 1000;
    Real cur = u.beta({x, Real(0)});
    CHECK(abs(cur - prev) < Real("0.02"));
    prev = cur;
  }
}

TEST_CASE("urysohn rejects a singular point on M") {
  std::vector<RatPoint> sigma = {{Rat(0)}};
  std::vector<RatPoint> M = {{Rat(0)}};
  CHECK_THROWS_AS(urysohn(sigma, M), UrysohnError);
}
