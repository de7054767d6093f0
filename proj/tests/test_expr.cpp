#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qr/expr.hpp"

#include <random>

using namespace qr;

TEST_CASE("documented evaluations") {
  auto e = parse_expr("cos(pi*x1)", 1);
  CHECK(abs(e->eval(std::vector<Real>{Real(0)}) - 1) < Real("1e-140"));

  auto f = parse_expr("x1^2 + x2^2", 2);
  CHECK(f->eval(std::vector<Real>{Real(3), Real(4)}) == Real(25));

  auto s = parse_expr("sqrt(-1+x1)", 1);  // parses fine
  CHECK_THROWS_AS(s->eval(std::vector<Real>{Real(0)}), EvalError);
}

TEST_CASE("precedence and associativity") {
  // pow binds tighter than unary minus
  CHECK(parse_expr("-x1^2")->eval(std::vector<Real>{Real(3)}) == Real(-9));
  // left associativity of - and /
  CHECK(parse_expr("1 - 2 - 3")->eval(std::vector<Real>{}) == Real(-4));
  CHECK(parse_expr("8 / 2 / 2")->eval(std::vector<Real>{}) == Real(2));
  CHECK(parse_expr("2 + 3 * 4")->eval(std::vector<Real>{}) == Real(14));
  CHECK(parse_expr("2 * 3^2")->eval(std::vector<Real>{}) == Real(18));
}

TEST_CASE("errors carry positions") {
  CHECK_THROWS_AS(parse_expr("1 + ("), ParseError);
  CHECK_THROWS_AS(parse_expr("foo(x1)"), ParseError);
  CHECK_THROWS_AS(parse_expr("sin(x1, x2)"), ParseError);
  CHECK_THROWS_AS(parse_expr("x1 +"), ParseError);
  CHECK_THROWS_AS(parse_expr("x2", 1), ParseError);  // exceeds declared n
  try {
    parse_expr("1 + bar");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
  }
}

TEST_CASE("decimal literals become exact rationals") {
  auto e = parse_expr("0.5 * x1", 1);
  CHECK(e->eval(std::vector<Real>{Real(3)}) == Real(3) / 2);
}

TEST_CASE("parse-print round trip is the identity on random expressions") {
  std::mt19937_64 rng(55);
  std::uniform_int_distribution<int> pick(0, 9), small(1, 9);
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    if (depth <= 0) {
      switch (pick(rng) % 4) {
        case 0: return std::to_string(small(rng));
        case 1: return "x1";
        case 2: return "x2";
        default: return "pi";
      }
    }
    switch (pick(rng)) {
      case 0: return "(" + gen(depth - 1) + " + " + gen(depth - 1) + ")";
      case 1: return "(" + gen(depth - 1) + " - " + gen(depth - 1) + ")";
      case 2: return "(" + gen(depth - 1) + " * " + gen(depth - 1) + ")";
      case 3: return "sin(" + gen(depth - 1) + ")";
      case 4: return "cos(" + gen(depth - 1) + ")";
      case 5: return "abs(" + gen(depth - 1) + ")";
      case 6: return "(-" + gen(depth - 1) + ")";
      case 7: return gen(depth - 1) + "^" + std::to_string(small(rng) % 4 + 1);
      case 8: return "exp(" + gen(depth - 1) + ")";
      default: return "(" + gen(depth - 1) + " / " + std::to_string(small(rng)) + ")";
    }
  };
  for (int rep = 0; rep < 200; ++rep) {
    std::string text = gen(3);
    ExprPtr a = parse_expr(text, 2);
    ExprPtr b = parse_expr(a->str(), 2);
    CHECK(a->equals(*b));
  }
}
