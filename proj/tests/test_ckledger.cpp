#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/ckwitness.hpp"
#include "qr/schedule.hpp"

#include <random>

using namespace qr;

namespace {

BoxDomain seg(double a, double b) {
  return BoxDomain::interval(exact_rat(a), exact_rat(b));
}

// witness for v = base(x)^{2kl} with base C^k
CkWitness power_witness(std::function<Real(const Real&)> base, int k, long long l2kl,
                        const BoxDomain& dom) {
  RealFn v{1, [base, l2kl](std::span<const Real> x) {
             return pow(base(x[0]), static_cast<int>(l2kl));
           }};
  RealFn root{1, [base](std::span<const Real> x) { return base(x[0]); }};
  // root here is |v|^{1/(2kl)} only when base >= 0; use abs
  RealFn root_abs{1, [base](std::span<const Real> x) { return abs(base(x[0])); }};
  (void)root;
  return CkWitness{v, root_abs, k, l2kl, dom};
}

SignField flip_at_zero() {
  SignField s;
  s.sign_at = [](const RealPoint& x) { return x[0] > 0 ? 1 : (x[0] < 0 ? -1 : 0); };
  s.zero_samples = {{Real(0)}};
  return s;
}

}  // namespace

TEST_CASE("descent_sum: single summand keeps the value") {
  // v = x^2 with k = 1, l = 1 (input exponent 2kl = 2)
  auto w = power_witness([](const Real& x) { return x; }, 1, 2, seg(-2, 2));
  CkWitness out = descent_sum({w});
  CHECK(out.l == 1);
  for (double t : {-1.5, -0.2, 0.0, 0.7}) {
    Real x(t);
    CHECK(abs(out.v.at1(x) - x * x) < Real("1e-100"));
    CHECK(abs(out.root.at1(x) - x * x) < Real("1e-100"));  // l = 1 root is v itself
  }
  CHECK(out.roundtrip_ok());
}

TEST_CASE("descent_sum: x^4 + (1-x)^4 passes the FD C^1 sweep") {
  auto w1 = power_witness([](const Real& x) { return x * x; }, 1, 2, seg(-2, 2));
  auto w2 = power_witness([](const Real& x) { return (1 - x) * (1 - x); }, 1, 2, seg(-2, 2));
  CkWitness out = descent_sum({w1, w2});
  CHECK(out.roundtrip_ok());
  FdCertificate cert = certify_ck(out.root, out.domain, 1, 1e-3);
  CHECK(cert.pass);
}

TEST_CASE("descent_sum of zero witnesses is zero") {
  auto w = power_witness([](const Real&) { return Real(0); }, 1, 2, seg(-1, 1));
  CkWitness out = descent_sum({w, w});
  for (double t : {-0.5, 0.0, 0.9}) CHECK(out.v.at1(Real(t)) == Real(0));
  FdCertificate cert = certify_ck(out.root, out.domain, 1, 1e-3);
  CHECK(cert.pass);
  CHECK(cert.max_jump == 0);
}

TEST_CASE("descent exponent mismatch is rejected") {
  auto w1 = power_witness([](const Real& x) { return x; }, 1, 2, seg(-1, 1));
  auto w2 = power_witness([](const Real& x) { return x; }, 1, 4, seg(-1, 1));
  CHECK_THROWS_AS(descent_sum({w1, w2}), std::invalid_argument);
  auto w3 = power_witness([](const Real& x) { return x; }, 1, 3, seg(-1, 1));
  CHECK_THROWS_AS(descent_sum({w3}), std::invalid_argument);  // 3 not divisible by 2k
}

TEST_CASE("prod_over_sum: equal inputs halve, zero at the common zero") {
  auto w = power_witness([](const Real& x) { return x; }, 1, 2, seg(-1, 1));
  CkWitness out = descent_prod_over_sum(w, w);
  for (double t : {-0.8, -0.1, 0.3}) {
    Real x(t);
    CHECK(abs(out.v.at1(x) - x * x / 2) < Real("1e-100"));
  }
  CHECK(out.v.at1(Real(0)) == Real(0));  // 0/0 convention, exactly 0
}

TEST_CASE("prod_over_sum: x^4 vs 1 is x^4/(x^4+1) and FD C^1") {
  auto w1 = power_witness([](const Real& x) { return x * x; }, 1, 2, seg(-1, 1));
  auto w2 = power_witness([](const Real&) { return Real(1); }, 1, 2, seg(-1, 1));
  CkWitness out = descent_prod_over_sum(w1, w2);
  for (double t : {-0.9, 0.2, 0.5}) {
    Real x(t);
    Real x4 = x * x * x * x;
    CHECK(abs(out.v.at1(x) - x4 / (x4 + 1)) < Real("1e-90"));
  }
  FdCertificate cert = certify_ck(out.root, out.domain, 1, 1e-3);
  CHECK(cert.pass);
}

TEST_CASE("sq_over_sum: v2 = 0 recovers v1; common zero gives 0") {
  auto w1 = power_witness([](const Real& x) { return x; }, 1, 2, seg(-1, 1));
  auto wz = power_witness([](const Real&) { return Real(0); }, 1, 2, seg(-1, 1));
  CkWitness out = descent_sq_over_sum(w1, wz);
  for (double t : {-0.7, 0.4}) {
    Real x(t);
    CHECK(abs(out.v.at1(x) - x * x) < Real("1e-100"));
  }
  CHECK(out.v.at1(Real(0)) == Real(0));

  CkWitness halved = descent_sq_over_sum(w1, w1);
  CHECK(abs(halved.v.at1(Real(0.5)) - Real(0.125)) < Real("1e-100"));  // x^2/2
}

TEST_CASE("symmetrize: x|x| is C^1 with vanishing derivative at 0") {
  // v = x^2 as a witness with l = 2 (root |x| is only used through v)
  RealFn v{1, [](std::span<const Real> x) { return x[0] * x[0]; }};
  RealFn root{1, [](std::span<const Real> x) { return abs(x[0]); }};
  CkWitness w{v, root, 1, 2, seg(-1, 1)};
  SignedFunction g = symmetrize(w, flip_at_zero());
  CHECK(g.certificate.pass);
  CHECK(g.certificate.max_zero_value <= g.certificate.jump_tol);
  CHECK(abs(g.fn.at1(Real(0.5)) - Real(0.25)) < Real("1e-100"));
  CHECK(abs(g.fn.at1(Real(-0.5)) + Real(0.25)) < Real("1e-100"));
}

TEST_CASE("symmetrize: all-plus signs reproduce v") {
  RealFn v{1, [](std::span<const Real> x) { return x[0] * x[0]; }};
  RealFn root{1, [](std::span<const Real> x) { return abs(x[0]); }};
  CkWitness w{v, root, 1, 2, seg(-1, 1)};
  SignField all_plus;
  all_plus.sign_at = [](const RealPoint&) { return 1; };
  SignedFunction g = symmetrize(w, all_plus);
  CHECK(g.certificate.pass);
  CHECK(abs(g.fn.at1(Real(-0.5)) - Real(0.25)) < Real("1e-100"));
}

TEST_CASE("symmetrize: v = x^4 with l = 2 flips to +-x^2, FD C^1") {
  RealFn v{1, [](std::span<const Real> x) { return pow(x[0], 4); }};
  RealFn root{1, [](std::span<const Real> x) { return x[0] * x[0]; }};
  CkWitness w{v, root, 1, 2, seg(-1, 1)};
  SignedFunction g = symmetrize(w, flip_at_zero());
  CHECK(g.certificate.pass);
}

TEST_CASE("symmetrize rejects l < k+1") {
  RealFn v{1, [](std::span<const Real> x) { return x[0] * x[0]; }};
  RealFn root = v;
  CkWitness w{v, root, 1, 1, seg(-1, 1)};
  CHECK_THROWS_AS(symmetrize(w, flip_at_zero()), SymmetrizeError);
}

TEST_CASE("symmetrize rejects a sign flip away from the zero set") {
  RealFn v{1, [](std::span<const Real> x) { return x[0] * x[0] + 1; }};  // no zeros
  RealFn root{1, [](std::span<const Real> x) { return sqrt(x[0] * x[0] + 1); }};
  CkWitness w{v, root, 1, 2, seg(-1, 1)};
  CHECK_THROWS_AS(symmetrize(w, flip_at_zero()), SymmetrizeError);
}

TEST_CASE("schedule_l instances") {
  CHECK(schedule_l(1, 1, 1) == 8);
  CHECK(schedule_l(2, 1, 1) == 128);
  CHECK(schedule_l(2, 1, 2) == 64);
  CHECK_THROWS_AS(schedule_l(2, 1, 3), std::out_of_range);
  CHECK_THROWS_AS(schedule_l(2, 1, 0), std::out_of_range);
}

TEST_CASE("schedule consistency replays the exponent chain") {
  // m=1, k=1: 8 = 2*2*2 and the final exponent 4 >= 3
  CHECK(schedule_consistency(1, 1));
  CHECK(schedule_consistency(2, 1));
  CHECK(schedule_consistency(3, 2));
  // hand replay for m=1, k=1: inputs 2l = 16, divide by 2(k+1) = 4 -> 4 = (k+1)^2
  CHECK(2 * schedule_l(1, 1, 1) / (2 * 2) == 4);
  CHECK(4 >= 1 + 2);
}

TEST_CASE("schedule_l decreases along the steps for m >= 2") {
  for (int m : {2, 3, 4})
    for (int k : {1, 2}) {
      long long prev = schedule_l(m, k, 1);
      for (int s = 2; s <= m; ++s) {
        long long cur = schedule_l(m, k, s);
        CHECK(cur < prev);
        prev = cur;
      }
    }
}

TEST_CASE("descent outputs satisfy the round-trip invariant") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coef(0.2, 2.0);
  for (int rep = 0; rep < 5; ++rep) {
    double a = coef(rng), b = coef(rng);
    auto w1 = power_witness([a](const Real& x) { return a * x; }, 1, 4, seg(-2, 2));
    auto w2 = power_witness([b](const Real& x) { return b * (1 - x); }, 1, 4, seg(-2, 2));
    CkWitness s = descent_sum({w1, w2});
    CkWitness p = descent_prod_over_sum(w1, w2);
    CkWitness q = descent_sq_over_sum(w1, w2);
    CHECK(s.roundtrip_ok(256));
    CHECK(p.roundtrip_ok(256));
    CHECK(q.roundtrip_ok(256));
  }
}
