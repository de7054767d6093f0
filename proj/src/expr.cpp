#include "qr/expr.hpp"

#include <cctype>
#include <sstream>

namespace qr {

namespace {

struct Parser {
  const std::string& s;
  std::size_t pos = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", static_cast<int>(pos));
  }

  ExprPtr make(Expr e) { return std::make_shared<Expr>(std::move(e)); }

  ExprPtr parse_sum() {
    ExprPtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        Expr e;
        e.kind = Expr::Kind::Add;
        e.a = lhs;
        e.b = parse_term();
        lhs = make(std::move(e));
      } else if (accept('-')) {
        Expr e;
        e.kind = Expr::Kind::Sub;
        e.a = lhs;
        e.b = parse_term();
        lhs = make(std::move(e));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        Expr e;
        e.kind = Expr::Kind::Mul;
        e.a = lhs;
        e.b = parse_factor();
        lhs = make(std::move(e));
      } else if (accept('/')) {
        Expr e;
        e.kind = Expr::Kind::Div;
        e.a = lhs;
        e.b = parse_factor();
        lhs = make(std::move(e));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_factor() {
    if (accept('-')) {
      Expr e;
      e.kind = Expr::Kind::Neg;
      e.a = parse_factor();
      return make(std::move(e));
    }
    if (accept('+')) return parse_factor();
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (accept('^')) {
      skip_ws();
      std::size_t start = pos;
      bool paren = accept('(');
      skip_ws();
      std::size_t dstart = pos;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos == dstart)
        throw ParseError("power exponent must be a nonnegative integer",
                         static_cast<int>(start));
      long e = std::stol(s.substr(dstart, pos - dstart));
      if (paren) expect(')');
      Expr p;
      p.kind = Expr::Kind::Pow;
      p.a = base;
      p.exponent = e;
      return make(std::move(p));
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= s.size()) throw ParseError("unexpected end of expression", static_cast<int>(pos));
    char c = s[pos];
    if (c == '(') {
      ++pos;
      ExprPtr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", static_cast<int>(pos));
  }

  ExprPtr parse_number() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
      ++pos;
    std::string lit = s.substr(start, pos - start);
    Expr e;
    e.kind = Expr::Kind::Num;
    try {
      e.num = rat_from_string(lit);
    } catch (const std::exception&) {
      throw ParseError("bad numeric literal '" + lit + "'", static_cast<int>(start));
    }
    return make(std::move(e));
  }

  ExprPtr parse_ident() {
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);
    if (name == "pi") {
      Expr e;
      e.kind = Expr::Kind::Pi;
      return make(std::move(e));
    }
    if (name.size() >= 2 && name[0] == 'x') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        int idx = std::stoi(name.substr(1));
        if (idx < 1)
          throw ParseError("variable indices start at x1", static_cast<int>(start));
        Expr e;
        e.kind = Expr::Kind::Var;
        e.var = idx - 1;
        return make(std::move(e));
      }
    }
    Expr::Kind k;
    if (name == "sqrt")
      k = Expr::Kind::Sqrt;
    else if (name == "sin")
      k = Expr::Kind::Sin;
    else if (name == "cos")
      k = Expr::Kind::Cos;
    else if (name == "exp")
      k = Expr::Kind::Exp;
    else if (name == "abs")
      k = Expr::Kind::Abs;
    else
      throw ParseError("unknown identifier '" + name + "'", static_cast<int>(start));
    expect('(');
    ExprPtr arg = parse_sum();
    if (peek() == ',')
      throw ParseError("'" + name + "' takes exactly one argument", static_cast<int>(pos));
    expect(')');
    Expr e;
    e.kind = k;
    e.a = arg;
    return make(std::move(e));
  }
};

}  // namespace

ExprPtr parse_expr(const std::string& text, int nvars) {
  Parser p(text);
  ExprPtr e = p.parse_sum();
  if (!p.eof()) throw ParseError("trailing input", static_cast<int>(p.pos));
  if (nvars >= 0 && e->max_var() >= nvars)
    throw ParseError("variable index exceeds the declared dimension n=" + std::to_string(nvars),
                     0);
  return e;
}

Real Expr::eval(std::span<const Real> x) const {
  switch (kind) {
    case Kind::Num: return to_real(num);
    case Kind::Pi: return pi_real();
    case Kind::Var:
      if (var >= static_cast<int>(x.size())) throw EvalError("variable out of range");
      return x[var];
    case Kind::Add: return a->eval(x) + b->eval(x);
    case Kind::Sub: return a->eval(x) - b->eval(x);
    case Kind::Mul: return a->eval(x) * b->eval(x);
    case Kind::Div: {
      Real d = b->eval(x);
      if (d == 0) throw EvalError("division by zero");
      return a->eval(x) / d;
    }
    case Kind::Neg: return -a->eval(x);
    case Kind::Pow: return exponent == 0 ? Real(1) : pow(a->eval(x), static_cast<int>(exponent));
    case Kind::Sqrt: {
      Real v = a->eval(x);
      if (v < 0) throw EvalError("sqrt of a negative value");
      return sqrt(v);
    }
    case Kind::Sin: return sin(a->eval(x));
    case Kind::Cos: return cos(a->eval(x));
    case Kind::Exp: return exp(a->eval(x));
    case Kind::Abs: return abs(a->eval(x));
  }
  throw EvalError("corrupt expression node");
}

std::string Expr::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Num: os << rat_to_string(num); break;
    case Kind::Pi: os << "pi"; break;
    case Kind::Var: os << "x" << (var + 1); break;
    case Kind::Add: os << "(" << a->str() << " + " << b->str() << ")"; break;
    case Kind::Sub: os << "(" << a->str() << " - " << b->str() << ")"; break;
    case Kind::Mul: os << "(" << a->str() << " * " << b->str() << ")"; break;
    case Kind::Div: os << "(" << a->str() << " / " << b->str() << ")"; break;
    case Kind::Neg: os << "(-" << a->str() << ")"; break;
    case Kind::Pow: os << a->str() << "^" << exponent; break;
    case Kind::Sqrt: os << "sqrt(" << a->str() << ")"; break;
    case Kind::Sin: os << "sin(" << a->str() << ")"; break;
    case Kind::Cos: os << "cos(" << a->str() << ")"; break;
    case Kind::Exp: os << "exp(" << a->str() << ")"; break;
    case Kind::Abs: os << "abs(" << a->str() << ")"; break;
  }
  return os.str();
}

int Expr::max_var() const {
  int m = (kind == Kind::Var) ? var : -1;
  if (a) m = std::max(m, a->max_var());
  if (b) m = std::max(m, b->max_var());
  return m;
}

bool Expr::equals(const Expr& o) const {
  if (kind != o.kind || num != o.num || var != o.var || exponent != o.exponent) return false;
  if (static_cast<bool>(a) != static_cast<bool>(o.a)) return false;
  if (static_cast<bool>(b) != static_cast<bool>(o.b)) return false;
  if (a && !a->equals(*o.a)) return false;
  if (b && !b->equals(*o.b)) return false;
  return true;
}

RealFn expr_fn(const ExprPtr& e, int nvars) {
  return {nvars, [e](std::span<const Real> x) { return e->eval(x); }};
}

}  // namespace qr
