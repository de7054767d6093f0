#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/kernels.hpp"

#include "oracles.hpp"

#include <random>

using namespace qr;

TEST_CASE("kernel values on the documented cases") {
  KernelSpec F{KernelKind::F, 1, 1, 2};
  CHECK(kernel_eval(F, {Real(1), Real(1)}) == Real(2));  // y1^2 + y2^2

  KernelSpec G{KernelKind::G, 1, 1, 2};
  CHECK(abs(kernel_eval(G, {Real(1), Real(1)}) - Real(1) / 2) < Real("1e-140"));

  for (auto kind : {KernelKind::F, KernelKind::G, KernelKind::H}) {
    KernelSpec s{kind, 2, 3, 2};
    CHECK(kernel_eval(s, {Real(0), Real(0)}) == Real(0));
  }
}

TEST_CASE("analytic partials on closed-form cases") {
  // F with k=l=1 is y1^2 + y2^2; d/dy1 at (1,0) is 2
  KernelSpec F{KernelKind::F, 1, 1, 2};
  CHECK(abs(kernel_partial_analytic(F, {1, 0}, {Real(1), Real(0)}) - 2) < Real("1e-130"));

  // G with k=l=1: d/dx of x^2 y^2/(x^2+y^2) at (1,1), FD oracle
  KernelSpec G{KernelKind::G, 1, 1, 2};
  auto g_eval = [&](const RealPoint& y) { return kernel_eval(G, y); };
  Real an = kernel_partial_analytic(G, {1, 0}, {Real(1), Real(1)});
  Real fd = testing::fd_richardson(g_eval, {Real(1), Real(1)}, {1, 0}, Real("1e-5"));
  CHECK(abs(an - fd) <= std::max(Real(1), abs(an)) * Real("1e-6"));

  // H with k=1, l=2: d/dy at (1/2, 1/2) against the FD oracle
  KernelSpec H{KernelKind::H, 1, 2, 2};
  auto h_eval = [&](const RealPoint& y) { return kernel_eval(H, y); };
  Real an_h = kernel_partial_analytic(H, {0, 1}, {Real(1) / 2, Real(1) / 2});
  Real fd_h = testing::fd_richardson(h_eval, {Real(1) / 2, Real(1) / 2}, {0, 1}, Real("1e-5"));
  CHECK(abs(an_h - fd_h) <= std::max(Real(1), abs(an_h)) * Real("1e-6"));
}

TEST_CASE("analytic/FD agreement on random points") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> mag(0.01, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto kind : {KernelKind::F, KernelKind::G, KernelKind::H}) {
    for (int k : {1, 2}) {
      KernelSpec spec{kind, k, 2, 2};
      auto eval = [&](const RealPoint& y) { return kernel_eval(spec, y); };
      for (int pt = 0; pt < 50; ++pt) {
        RealPoint y(2);
        for (auto& c : y) c = Real(mag(rng)) * (coin(rng) ? 1 : -1);
        for (int o1 = 0; o1 <= k; ++o1)
          for (int o2 = 0; o1 + o2 <= k; ++o2) {
            if (o1 + o2 == 0) continue;
            Real an = kernel_partial_analytic(spec, {o1, o2}, y);
            Real fd = testing::fd_richardson(eval, y, {o1, o2}, Real("1e-4"));
            CHECK(abs(an - fd) <= std::max(Real(1), abs(an)) * Real("1e-6"));
          }
      }
    }
  }
}

TEST_CASE("derivatives vanish at the origin") {
  KernelSpec F{KernelKind::F, 2, 3, 2};
  CHECK(kernel_partial_at_zero(F, {2, 0}) == Real(0));

  KernelSpec G{KernelKind::G, 1, 2, 2};
  CHECK(kernel_partial_at_zero(G, {0, 0}) == Real(0));

  KernelSpec H{KernelKind::H, 1, 1, 2};
  CHECK(kernel_partial_at_zero(H, {1, 0}) == Real(0));
}

TEST_CASE("per-term bounds on documented cases") {
  // F, k=l=1, p=2, j=1 term at (1/2, 1/2)
  KernelSpec F{KernelKind::F, 1, 1, 2};
  for (const auto& term : enumerate_terms(F, 1))
    CHECK(term_bound_check(F, term, {Real(1) / 2, Real(1) / 2}));

  // G, k=2, l=1, j=2 at (1/10, 1/10)
  KernelSpec G{KernelKind::G, 2, 1, 2};
  for (const auto& term : enumerate_terms(G, 2))
    CHECK(term_bound_check(G, term, {Real(1) / 10, Real(1) / 10}));

  // max |y_i| = 1: the F bound equals the arity
  KernelSpec F2{KernelKind::F, 2, 2, 3};
  for (const auto& term : enumerate_terms(F2, 2))
    CHECK(term_bound_check(F2, term, {Real(1), Real(1) / 3, Real(-1)}));
}

TEST_CASE("exhaustive term enumeration satisfies the bound at random points") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mag(0.01, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (auto kind : {KernelKind::F, KernelKind::G, KernelKind::H}) {
    KernelSpec spec{kind, 2, 2, 2};
    for (int j = 0; j <= 2; ++j) {
      auto terms = enumerate_terms(spec, j);
      CHECK(!terms.empty());
      for (int pt = 0; pt < 30; ++pt) {
        RealPoint y(2);
        for (auto& c : y) c = Real(mag(rng)) * (coin(rng) ? 1 : -1);
        for (const auto& term : terms) CHECK(term_bound_check(spec, term, y));
      }
    }
  }
}

TEST_CASE("symmetries") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> mag(0.05, 1.0);
  KernelSpec F{KernelKind::F, 2, 2, 3};
  KernelSpec G{KernelKind::G, 1, 2, 2};
  for (int rep = 0; rep < 25; ++rep) {
    RealPoint y{Real(mag(rng)), Real(mag(rng)), Real(mag(rng))};
    Real base = kernel_eval(F, y);
    RealPoint perm{y[2], y[0], y[1]};
    RealPoint flip{-y[0], y[1], -y[2]};
    CHECK(abs(kernel_eval(F, perm) - base) < Real("1e-130"));
    CHECK(abs(kernel_eval(F, flip) - base) < Real("1e-130"));

    RealPoint xy{y[0], y[1]};
    RealPoint yx{y[1], y[0]};
    RealPoint ev{-y[0], y[1]};
    Real gb = kernel_eval(G, xy);
    CHECK(abs(kernel_eval(G, yx) - gb) < Real("1e-130"));
    CHECK(abs(kernel_eval(G, ev) - gb) < Real("1e-130"));
  }
}

TEST_CASE("l-th power of the F kernel recovers the power sum") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> num(-10, 10), den(1, 10);
  KernelSpec F{KernelKind::F, 1, 3, 2};
  for (int rep = 0; rep < 25; ++rep) {
    Rat a(num(rng), den(rng)), b(num(rng), den(rng));
    if (a == 0 && b == 0) continue;
    RealPoint y{to_real(a), to_real(b)};
    Rat exact = 1;
    Rat a6 = a * a * a * a * a * a, b6 = b * b * b * b * b * b;  // 2kl = 6
    exact = a6 + b6;
    Real rooted = pow(kernel_eval(F, y), 3);
    CHECK(abs(rooted - to_real(exact)) <= abs(to_real(exact)) * Real("1e-100") + Real("1e-120"));
  }
}

TEST_CASE("decay slope of summed partials near the origin") {
  for (auto kind : {KernelKind::F, KernelKind::G, KernelKind::H}) {
    for (int k : {1, 2}) {
      KernelSpec spec{kind, k, 2, 2};
      for (int j = 1; j <= k; ++j) {
        std::vector<double> xs, ys;
        for (double t = 1e-4; t <= 1e-1 * 1.001; t *= 3.1623) {
          RealPoint y{Real(t), Real(t) * Real("0.7")};
          Real total(0);
          for (int o1 = 0; o1 <= j; ++o1) {
            int o2 = j - o1;
            total += abs(kernel_partial_analytic(spec, {o1, o2}, y));
          }
          if (total == 0) continue;
          xs.push_back(std::log(t));
          ys.push_back(log(total).convert_to<double>());
        }
        REQUIRE(xs.size() >= 2);
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          mx += xs[i];
          my += ys[i];
        }
        mx /= xs.size();
        my /= xs.size();
        double num = 0, den = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          num += (xs[i] - mx) * (ys[i] - my);
          den += (xs[i] - mx) * (xs[i] - mx);
        }
        CHECK(num / den >= (2.0 * k - j) - 0.1);
      }
    }
  }
}
