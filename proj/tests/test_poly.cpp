#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/multipoly.hpp"

#include <random>

using namespace qr;

namespace {

MultiPoly random_poly(std::mt19937_64& rng, int nvars, int max_deg, int terms) {
  std::uniform_int_distribution<int> deg(0, max_deg), num(-9, 9), den(1, 9);
  MultiPoly p(nvars);
  for (int t = 0; t < terms; ++t) {
    ExpVec e(nvars);
    for (auto& x : e) x = deg(rng);
    p.set_coeff(e, Rat(num(rng), den(rng)));
  }
  return p;
}

RatPoint random_point(std::mt19937_64& rng, int nvars) {
  std::uniform_int_distribution<int> num(-20, 20), den(1, 20);
  RatPoint x(nvars);
  for (auto& c : x) c = Rat(num(rng), den(rng));
  return x;
}

}  // namespace

TEST_CASE("eval on the documented cases") {
  // x1^2 + 1 at 0
  MultiPoly p(1);
  p.set_coeff({2}, Rat(1));
  p.set_coeff({0}, Rat(1));
  CHECK(p(RatPoint{Rat(0)}) == Rat(1));

  // zero polynomial
  MultiPoly z(1);
  CHECK(z(RatPoint{Rat(5, 3)}) == Rat(0));
  CHECK(z.degree() == -1);

  // (1 - x^2)/2 at 1/3 -> 4/9
  MultiPoly q(1);
  q.set_coeff({0}, Rat(1, 2));
  q.set_coeff({2}, Rat(-1, 2));
  CHECK(q(RatPoint{Rat(1, 3)}) == Rat(4, 9));
}

TEST_CASE("eval rejects dimension mismatch") {
  MultiPoly p(2);
  p.set_coeff({1, 0}, Rat(1));
  CHECK_THROWS_AS(p(RatPoint{Rat(1)}), std::invalid_argument);
}

TEST_CASE("ring axioms hold exactly at random rational points") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    int nvars = 1 + (rep % 2);
    MultiPoly p = random_poly(rng, nvars, 5, 6);
    MultiPoly q = random_poly(rng, nvars, 5, 6);
    RatPoint x = random_point(rng, nvars);
    CHECK((p + q)(x) == p(x) + q(x));
    CHECK((p * q)(x) == p(x) * q(x));
    CHECK((p - q)(x) == p(x) - q(x));
  }
}

TEST_CASE("pow_eval_stable on the documented cases") {
  MultiPoly x = MultiPoly::variable(1, 0);
  auto r = pow_eval_stable(x, RatPoint{Rat(1, 2)}, 256);
  CHECK(r.sign == 1);
  CHECK(abs(r.log_magnitude - 256 * log(Real(1) / 2)) < Real("1e-100"));

  auto z = pow_eval_stable(x, RatPoint{Rat(0)}, 16);
  CHECK(z.sign == 0);
  CHECK(z.log_magnitude == -std::numeric_limits<Real>::infinity());

  MultiPoly xm1 = x - MultiPoly::constant(1, Rat(1));
  auto n = pow_eval_stable(xm1, RatPoint{Rat(1, 2)}, 3);
  CHECK(n.sign == -1);
  CHECK(abs(n.log_magnitude - 3 * log(Real(1) / 2)) < Real("1e-100"));
}

TEST_CASE("pow_eval_stable agrees with exact powers") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<unsigned long> edist(1, 8);
  int checked = 0;
  for (int rep = 0; rep < 200 && checked < 100; ++rep) {
    MultiPoly p = random_poly(rng, 1, 4, 4);
    RatPoint x = random_point(rng, 1);
    Rat v = p(x);
    if (v == 0) continue;
    unsigned long e = edist(rng);
    Rat exact = 1;
    for (unsigned long i = 0; i < e; ++i) exact *= v;
    auto r = pow_eval_stable(p, x, e);
    Real approx = Real(r.sign) * exp(r.log_magnitude);
    CHECK(abs(approx - to_real(exact)) <= abs(to_real(exact)) * Real("1e-12"));
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("derivative and height") {
  MultiPoly p(2);
  p.set_coeff({2, 1}, Rat(3));
  p.set_coeff({0, 1}, Rat(-1, 2));
  MultiPoly dx = p.derivative(0);
  CHECK(dx(RatPoint{Rat(1), Rat(1)}) == Rat(6));
  CHECK(p.height() == Rat(7, 2));
}

TEST_CASE("json round trip") {
  std::mt19937_64 rng(13);
  MultiPoly p = random_poly(rng, 2, 6, 8);
  MultiPoly q = MultiPoly::from_json(p.to_json());
  CHECK(p == q);
}
