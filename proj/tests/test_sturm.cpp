#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/sturm.hpp"

using namespace qr;

namespace {
UniPoly poly(std::initializer_list<long> coeffs) {
  std::vector<Rat> c;
  for (long v : coeffs) c.emplace_back(v);
  return UniPoly(std::move(c));
}
}  // namespace

TEST_CASE("root counts") {
  // x^2 - 1/4: two roots in (-1, 1)
  UniPoly p({std::vector<Rat>{Rat(-1, 4), Rat(0), Rat(1)}});
  SturmSequence s = SturmSequence::build(p);
  CHECK(s.count_roots(Rat(-1), Rat(1)) == 2);
  CHECK(s.count_roots(Rat(0), Rat(1)) == 1);
  CHECK(s.count_roots(Rat(2), Rat(3)) == 0);

  // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
  UniPoly q = poly({-6, 11, -6, 1});
  SturmSequence sq = SturmSequence::build(q);
  CHECK(sq.count_roots(Rat(0), Rat(4)) == 3);
  CHECK(sq.count_roots(Rat(3, 2), Rat(5, 2)) == 1);
}

TEST_CASE("multiple roots count once") {
  // (x-1)^2 (x+2) = x^3 - 3x + 2, distinct roots 1 and -2
  UniPoly q({std::vector<Rat>{Rat(2), Rat(-3), Rat(0), Rat(1)}});
  SturmSequence s = SturmSequence::build(q);
  CHECK(s.count_roots(Rat(-3), Rat(3)) == 2);
}

TEST_CASE("isolation refines to the requested width") {
  UniPoly p({std::vector<Rat>{Rat(-1, 4), Rat(0), Rat(1)}});
  auto roots = isolate_roots(p, Rat(-1), Rat(1), Rat(1, 1000000));
  REQUIRE(roots.size() == 2);
  CHECK(abs(to_real(roots[0].approx + Rat(1, 2))) < Real("1e-5"));
  CHECK(abs(to_real(roots[1].approx - Rat(1, 2))) < Real("1e-5"));
  for (const auto& r : roots) CHECK(r.hi - r.lo <= Rat(1, 1000000));
}

TEST_CASE("dense polynomial isolation") {
  // Chebyshev-like oscillator: 16x^5 - 20x^3 + 5x (roots at sin-like points)
  UniPoly p({std::vector<Rat>{Rat(0), Rat(5), Rat(0), Rat(-20), Rat(0), Rat(16)}});
  auto roots = isolate_roots(p, Rat(-1), Rat(1), Rat(1, 100000));
  CHECK(roots.size() == 5);
}
