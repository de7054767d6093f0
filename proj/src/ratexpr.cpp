#include "qr/ratexpr.hpp"

#include <stdexcept>

namespace qr {

namespace {
RatExprPtr node(ExprOp op, int nvars) {
  auto e = std::make_shared<RatExpr>();
  e->op = op;
  e->nvars = nvars;
  return e;
}
RatExprPtr binary(ExprOp op, RatExprPtr x, RatExprPtr y) {
  if (x->nvars != y->nvars) throw std::invalid_argument("RatExpr: nvars mismatch");
  auto e = std::make_shared<RatExpr>();
  e->op = op;
  e->nvars = x->nvars;
  e->a = std::move(x);
  e->b = std::move(y);
  return e;
}
}  // namespace

RatExprPtr RatExpr::make_poly(MultiPoly p) {
  auto e = std::make_shared<RatExpr>();
  e->op = ExprOp::Poly;
  e->nvars = p.nvars();
  e->poly = std::move(p);
  return e;
}

RatExprPtr RatExpr::make_const(int nvars, Rat c) {
  auto e = node(ExprOp::Const, nvars);
  const_cast<RatExpr&>(*e).cval = std::move(c);
  return e;
}

RatExprPtr RatExpr::add(RatExprPtr x, RatExprPtr y) { return binary(ExprOp::Add, x, y); }
RatExprPtr RatExpr::sub(RatExprPtr x, RatExprPtr y) { return binary(ExprOp::Sub, x, y); }
RatExprPtr RatExpr::mul(RatExprPtr x, RatExprPtr y) { return binary(ExprOp::Mul, x, y); }
RatExprPtr RatExpr::div(RatExprPtr x, RatExprPtr y) { return binary(ExprOp::Div, x, y); }

RatExprPtr RatExpr::neg(RatExprPtr x) {
  auto e = node(ExprOp::Neg, x->nvars);
  const_cast<RatExpr&>(*e).a = std::move(x);
  return e;
}

RatExprPtr RatExpr::pow(RatExprPtr x, unsigned long p) {
  auto e = node(ExprOp::Pow, x->nvars);
  auto& m = const_cast<RatExpr&>(*e);
  m.a = std::move(x);
  m.exponent = p;
  return e;
}

RatExprPtr RatExpr::compose(ChebPoly c, RatExprPtr inner) {
  auto e = node(ExprOp::Compose, inner->nvars);
  auto& m = const_cast<RatExpr&>(*e);
  m.a = std::move(inner);
  m.comp = std::move(c);
  return e;
}

namespace {

Rat rat_pow(const Rat& base, unsigned long e) {
  Rat acc(1), b = base;
  while (e) {
    if (e & 1ul) acc *= b;
    e >>= 1ul;
    if (e) b *= b;
  }
  return acc;
}

// Memoized over shared nodes; nullopt short-circuits on division by zero.
std::optional<Rat> eval_rat_memo(const RatExpr* e, const RatPoint& x,
                                 std::map<const RatExpr*, std::optional<Rat>>& memo) {
  auto it = memo.find(e);
  if (it != memo.end()) return it->second;
  std::optional<Rat> out;
  switch (e->op) {
    case ExprOp::Poly: out = e->poly(x); break;
    case ExprOp::Const: out = e->cval; break;
    case ExprOp::Neg: {
      auto v = eval_rat_memo(e->a.get(), x, memo);
      if (v) out = Rat(-*v);
      break;
    }
    case ExprOp::Pow: {
      auto v = eval_rat_memo(e->a.get(), x, memo);
      if (v) out = rat_pow(*v, e->exponent);
      break;
    }
    case ExprOp::Compose: {
      auto v = eval_rat_memo(e->a.get(), x, memo);
      if (v) out = e->comp(*v);
      break;
    }
    default: {
      auto va = eval_rat_memo(e->a.get(), x, memo);
      auto vb = eval_rat_memo(e->b.get(), x, memo);
      if (va && vb) {
        switch (e->op) {
          case ExprOp::Add: out = Rat(*va + *vb); break;
          case ExprOp::Sub: out = Rat(*va - *vb); break;
          case ExprOp::Mul: out = Rat(*va * *vb); break;
          case ExprOp::Div:
            if (*vb == 0)
              out = std::nullopt;
            else
              out = Rat(*va / *vb);
            break;
          default: throw std::logic_error("unreachable");
        }
      }
      break;
    }
  }
  memo[e] = out;
  return out;
}

Real eval_real_memo(const RatExpr* e, const RealPoint& x,
                    std::map<const RatExpr*, Real>& memo) {
  auto it = memo.find(e);
  if (it != memo.end()) return it->second;
  Real out;
  switch (e->op) {
    case ExprOp::Poly: out = e->poly(x); break;
    case ExprOp::Const: out = to_real(e->cval); break;
    case ExprOp::Neg: out = -eval_real_memo(e->a.get(), x, memo); break;
    case ExprOp::Pow: {
      Real v = eval_real_memo(e->a.get(), x, memo);
      out = (v == 0) ? Real(0) : pow(v, static_cast<int>(e->exponent));
      break;
    }
    case ExprOp::Compose: out = e->comp(eval_real_memo(e->a.get(), x, memo)); break;
    case ExprOp::Add:
      out = eval_real_memo(e->a.get(), x, memo) + eval_real_memo(e->b.get(), x, memo);
      break;
    case ExprOp::Sub:
      out = eval_real_memo(e->a.get(), x, memo) - eval_real_memo(e->b.get(), x, memo);
      break;
    case ExprOp::Mul:
      out = eval_real_memo(e->a.get(), x, memo) * eval_real_memo(e->b.get(), x, memo);
      break;
    case ExprOp::Div:
      out = eval_real_memo(e->a.get(), x, memo) / eval_real_memo(e->b.get(), x, memo);
      break;
  }
  memo[e] = out;
  return out;
}

}  // namespace

std::optional<Rat> RatExpr::eval_rat(const RatPoint& x) const {
  std::map<const RatExpr*, std::optional<Rat>> memo;
  return eval_rat_memo(this, x, memo);
}

Real RatExpr::eval_real(const RealPoint& x) const {
  std::map<const RatExpr*, Real> memo;
  return eval_real_memo(this, x, memo);
}

RealFn RatExpr::as_realfn() const {
  // keep the subtree alive in the closure
  auto self = std::make_shared<RatExpr>(*this);
  return {nvars, [self](std::span<const Real> x) {
            RealPoint p(x.begin(), x.end());
            return self->eval_real(p);
          }};
}

nlohmann::json RatExpr::to_json() const {
  nlohmann::json j;
  switch (op) {
    case ExprOp::Poly:
      j["op"] = "poly";
      j["poly"] = poly.to_json();
      break;
    case ExprOp::Const:
      j["op"] = "const";
      j["value"] = rat_to_string(cval);
      j["nvars"] = nvars;
      break;
    case ExprOp::Neg:
      j["op"] = "neg";
      j["a"] = a->to_json();
      break;
    case ExprOp::Pow:
      j["op"] = "pow";
      j["a"] = a->to_json();
      j["exponent"] = exponent;
      break;
    case ExprOp::Compose:
      j["op"] = "compose";
      j["a"] = a->to_json();
      j["coeffs"] = comp.to_json();
      break;
    case ExprOp::Add: j["op"] = "add"; j["a"] = a->to_json(); j["b"] = b->to_json(); break;
    case ExprOp::Sub: j["op"] = "sub"; j["a"] = a->to_json(); j["b"] = b->to_json(); break;
    case ExprOp::Mul: j["op"] = "mul"; j["a"] = a->to_json(); j["b"] = b->to_json(); break;
    case ExprOp::Div: j["op"] = "div"; j["a"] = a->to_json(); j["b"] = b->to_json(); break;
  }
  return j;
}

RatExprPtr RatExpr::from_json(const nlohmann::json& j) {
  std::string op = j.at("op").get<std::string>();
  if (op == "poly") return make_poly(MultiPoly::from_json(j.at("poly")));
  if (op == "const")
    return make_const(j.at("nvars").get<int>(), rat_from_string(j.at("value").get<std::string>()));
  if (op == "neg") return neg(from_json(j.at("a")));
  if (op == "pow") return pow(from_json(j.at("a")), j.at("exponent").get<unsigned long>());
  if (op == "compose") return compose(ChebPoly::from_json(j.at("coeffs")), from_json(j.at("a")));
  auto a = from_json(j.at("a"));
  auto b = from_json(j.at("b"));
  if (op == "add") return add(a, b);
  if (op == "sub") return sub(a, b);
  if (op == "mul") return mul(a, b);
  if (op == "div") return div(a, b);
  throw std::invalid_argument("RatExpr::from_json: unknown op " + op);
}

}  // namespace qr
