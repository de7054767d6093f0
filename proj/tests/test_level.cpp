#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/level.hpp"

using namespace qr;

namespace {

RealFn fn1(std::function<Real(const Real&)> f) {
  return {1, [f](std::span<const Real> x) { return f(x[0]); }};
}

RealFn const1() {
  return fn1([](const Real&) { return Real(1); });
}

BallDomain interval_ball(double r) { return BallDomain({Rat(0)}, exact_rat(r)); }

LevelOptions fast_opts() {
  LevelOptions o;
  o.grid_h = Rat(1, 400);
  o.p_degree_cap = 128;
  o.c_degree_cap = 1024;
  return o;
}

}  // namespace

TEST_CASE("thresholds for f = x^2, g = 1 against the analytic sublevel oracle") {
  BallDomain G = interval_ball(1);
  RealFn f = fn1([](const Real& x) { return x * x; });
  GridRegion fr = label_grid(f, G, Rat(1, 400));
  std::vector<Rat> zeros = detect_nonneg_zeros(fr, f);
  REQUIRE(zeros.size() == 1);
  CHECK(abs(to_real(zeros[0])) < Real("1e-6"));
  GridRegion gr = label_grid(const1(), G, Rat(1, 400));

  GridRegion fg = fr;  // product with g = 1
  Components A = components(fg);
  Thresholds th = select_thresholds(G, Rat(1, 25), fg, A, fr.values, gr.values,
                                    zero_cells_of(fr), zero_cells_of(gr), {}, Rat(0));
  // analytic: sup of x^2 over the 2 delta neighborhood is (2 delta)^2 < eps/2 = 0.02
  double delta = to_double(th.delta_f);
  CHECK(4 * delta * delta < 0.02 + 1e-9);
  CHECK(delta <= 0.0708);
  CHECK(th.eps1_f > 0);
  CHECK(th.eps1_g > 0);
  CHECK(th.tube.rho > 0);
}

TEST_CASE("run_level rejects eps >= 1") {
  BallDomain G = interval_ball(1);
  CHECK_THROWS_WITH_AS(run_level(fn1([](const Real& x) { return abs(x); }), const1(), G,
                                 Rat(3, 2), 2, fast_opts()),
                       doctest::Contains("eps"), LevelError);
}

TEST_CASE("run_level with constant inputs: empty zero set, trivial thresholds") {
  BallDomain G = interval_ball(1);
  LevelOutput out = run_level(const1(), const1(), G, Rat(1, 10), 2, fast_opts());
  CHECK(out.tube.zero_cells.empty());
  CHECK(out.tube.rho == 0);
  CHECK(out.components.A.count() == 1);
  CHECK(out.components.B.count() == 1);
  REQUIRE(out.components.matching.size() == 1);
  CHECK(out.f_side.achieved_error <= 0.1);
  CHECK(out.g_side.achieved_error <= 0.1);
  // Q never vanishes on the closed ball (eps < 1)
  for (double t : {-0.99, -0.3, 0.5, 0.99})
    CHECK(out.g_side.P(RealPoint{Real(t)}) > 0);
}

TEST_CASE("run_level on f = x^2 with l = 1 meets the documented grid bound") {
  BallDomain G = interval_ball(1);
  RealFn f = fn1([](const Real& x) { return x * x; });
  LevelOptions opts = fast_opts();
  LevelOutput out = run_level(f, const1(), G, Rat(1, 10), 1, opts);
  // dense-grid sup oracle on 10^4 points
  const MultiPoly& P = out.f_side.P;
  Real worst(0);
  for (int i = 0; i <= 10000; ++i) {
    Real x = Real(-1) + Real(2 * i) / 10000;
    Real pv = P(RealPoint{x});
    Real approx = out.f_side.ftilde.value(RealPoint{x}) * pv * pv;
    worst = std::max(worst, abs(x * x - approx));
  }
  CHECK(worst.convert_to<double>() <= 0.1);
  // ftilde P^{2l} stays below eps/2 on the delta-neighborhood of the zero
  double delta = to_double(out.f_side.delta);
  for (double t = -delta; t <= delta; t += delta / 8) {
    Real x(t);
    Real pv = P(RealPoint{x});
    CHECK(out.f_side.ftilde.value(RealPoint{x}) * pv * pv < Real("0.05"));
  }
}

TEST_CASE("run_level on the kink: |x| with certification") {
  BallDomain G = interval_ball(1);
  RealFn f = fn1([](const Real& x) { return abs(x); });
  LevelOptions opts = fast_opts();
  opts.certify_1d = true;
  LevelOutput out = run_level(f, const1(), G, Rat(1, 5), 2, opts);

  // interval-oracle structure: A has 2 components, B has 3, matching size 2
  CHECK(out.components.A.count() == 2);
  CHECK(out.components.B.count() == 3);
  CHECK(out.components.matching.size() == 2);
  CHECK(out.components.unmatched_B.size() == 1);
  REQUIRE(out.f_side.sturm_root_count.has_value());
  CHECK(*out.f_side.sturm_root_count == 2);
  REQUIRE(out.g_side.sturm_root_count.has_value());
  CHECK(*out.g_side.sturm_root_count == 0);
  CHECK(out.f_side.achieved_error <= 0.2);
  CHECK(out.fg_tube_sup < 0.2);
}

TEST_CASE("symmetric inputs produce symmetric sides") {
  BallDomain G = interval_ball(1);
  RealFn f = fn1([](const Real& x) { return abs(x); });
  LevelOptions opts = fast_opts();
  LevelOutput ab = run_level(f, const1(), G, Rat(1, 5), 2, opts);
  LevelOutput ba = run_level(const1(), f, G, Rat(1, 5), 2, opts);
  CHECK(ab.f_side.zero_points.size() == ba.g_side.zero_points.size());
  CHECK(ab.g_side.zero_points.size() == ba.f_side.zero_points.size());
  CHECK(ab.components.A.count() == ba.components.A.count());
  // swapped runs agree where it matters: the P of one run plays Q in the other
  CHECK(ab.f_side.P.degree() == ba.g_side.P.degree());
}

TEST_CASE("two-scale option tightens the designated box") {
  BallDomain G = interval_ball(1);
  RealFn f = fn1([](const Real& x) { return abs(x); });
  LevelOptions opts = fast_opts();
  opts.tight_box = BoxDomain::interval(Rat(-1, 4), Rat(1, 4));
  opts.tight_eps = Rat(1, 20);
  LevelOutput out = run_level(f, const1(), G, Rat(1, 5), 2, opts);
  // re-measure on the tight box
  Real worst(0);
  const MultiPoly& P = out.f_side.P;
  for (int i = 0; i <= 2000; ++i) {
    Real x = Real(-1) / 4 + Real(i) / 4000;
    Real pv = P(RealPoint{x});
    worst = std::max(worst, abs(abs(x) - out.f_side.ftilde.value(RealPoint{x}) * pv * pv));
  }
  CHECK(worst.convert_to<double>() <= 0.05);
}
