#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/approx.hpp"

#include "oracles.hpp"

#include <random>

using namespace qr;

namespace {

std::vector<Sample> sample_fn(const std::function<Real(const Real&)>& f, const BoxDomain& box,
                              int per_axis) {
  std::vector<Sample> out;
  for (auto& p : uniform_grid(box, per_axis)) {
    Real v = f(to_real(p[0]));
    out.emplace_back(std::move(p), v);
  }
  return out;
}

}  // namespace

TEST_CASE("exactly representable target is recovered") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  auto samples = sample_fn([](const Real& x) { return x; }, box, 8);
  FitResult fit = approx_sw(samples, box, 1, Real("1e-12"));
  CHECK(fit.achieved_sup <= 1e-12);
  // the fitted polynomial is the identity up to rounding
  for (double t : {-0.9, -0.3, 0.4, 1.0}) {
    RealPoint x{Real(t)};
    CHECK(abs(fit.poly(x) - Real(t)) < Real("1e-10"));
  }
}

TEST_CASE("|x| at degree 0 matches the exact normal-equations oracle") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  // grid density rule: 4*(degree+1) = 4 symmetric points
  auto pts = uniform_grid(box, fit_points_per_axis(1, 0));
  REQUIRE(pts.size() == 4);
  std::vector<Sample> samples;
  std::vector<std::pair<Rat, Rat>> exact_samples;
  for (const auto& p : pts) {
    Rat v = abs(p[0]);
    samples.emplace_back(p, to_real(v));
    exact_samples.emplace_back(p[0], v);
  }
  auto coeffs = testing::normal_equations_fit(exact_samples, 0);
  CHECK(coeffs[0] == Rat(2, 3));  // mean of {1, 1/3, 1/3, 1}

  FitResult fit = approx_sw(samples, box, 0, Real(1));
  CHECK(abs(fit.poly(RatPoint{Rat(0)}) - Rat(2, 3)) < Rat(1, Int(1) << 40));
  CHECK(fit.achieved_sup == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("cos(pi x) on [-1/2,1/2] reaches 1e-3 at degree 8") {
  BoxDomain box = BoxDomain::interval(Rat(-1, 2), Rat(1, 2));
  RealFn fn{1, [](std::span<const Real> x) { return cos(pi_real() * x[0]); }};
  FitResult fit = approx_sw_fn(fn, box, 8, Real("1e-3"));
  CHECK(fit.achieved_sup <= 1e-3);
  // dense-grid sup oracle
  Real worst(0);
  for (int i = 0; i <= 2000; ++i) {
    Real x = Real(-1) / 2 + Real(i) / 2000;
    worst = std::max(worst, abs(fit.poly(RealPoint{x}) - cos(pi_real() * x)));
  }
  CHECK(worst.convert_to<double>() <= 1e-3);
}

TEST_CASE("reported error is non-increasing in the degree cap") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  auto samples = sample_fn([](const Real& x) { return abs(x); }, box, 801);
  double prev = 1e300;
  for (int cap : {0, 1, 2, 3, 4, 8, 16, 32}) {
    double achieved;
    try {
      achieved = approx_sw(samples, box, cap, Real("1e-30")).achieved_sup;
    } catch (const DegreeExhausted& e) {
      achieved = e.best.achieved_sup;
    }
    CHECK(achieved <= prev + 1e-15);
    prev = achieved;
  }
}

TEST_CASE("degree exhaustion carries the best fit and names the cap") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  auto samples = sample_fn([](const Real& x) { return abs(x); }, box, 200);
  try {
    approx_sw(samples, box, 8, Real("1e-9"));
    FAIL("expected DegreeExhausted");
  } catch (const DegreeExhausted& e) {
    CHECK(std::string(e.what()).find("cap 8") != std::string::npos);
    CHECK(e.best.achieved_sup > 1e-9);
    CHECK(e.best.poly.degree() >= 0);
  }
}

TEST_CASE("approx_positive: constant target") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  RealFn one{1, [](std::span<const Real>) { return Real(1); }};
  PositiveFit fit = approx_positive(one, box, Real("1e-3"));
  CHECK(fit.eta > 0);
  CHECK(fit.achieved_sup <= 1e-3);
  for (double t : {-0.99, 0.0, 0.37}) {
    CHECK(abs(fit.poly(RealPoint{Real(t)}) - 1) < Real("1e-3"));
  }
}

TEST_CASE("approx_positive: 1 + x^2 within tolerance, strictly positive far out") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  RealFn fn{1, [](std::span<const Real> x) { return 1 + x[0] * x[0]; }};
  PositiveFit fit = approx_positive(fn, box, Real("1e-3"));
  // grid sup oracle
  Real worst(0);
  for (int i = 0; i <= 2000; ++i) {
    Real x = Real(-1) + Real(i) / 1000;
    worst = std::max(worst, abs(fit.poly(RealPoint{x}) - (1 + x * x)));
  }
  CHECK(worst.convert_to<double>() <= 1e-3);

  // positivity on 10^4 random points of the 10x-scaled box
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wide(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    Real x(wide(rng));
    CHECK(fit.poly(RealPoint{x}) > 0);
  }
}

TEST_CASE("approx_positive rejects targets touching zero") {
  BoxDomain box = BoxDomain::interval(-1, 1);
  RealFn fn{1, [](std::span<const Real> x) { return x[0] * x[0]; }};  // vanishes at 0
  CHECK_THROWS_AS(approx_positive(fn, box, Real("1e-3")), PreconditionError);
  // the relaxed variant accepts it
  PositiveFit fit = approx_positive_relaxed(fn, box, Real("1e-2"));
  CHECK(fit.poly(RealPoint{Real(0)}) > 0);
}
