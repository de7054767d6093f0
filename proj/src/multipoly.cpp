#include "qr/multipoly.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qr {

MultiPoly MultiPoly::constant(int nvars, const Rat& c) {
  MultiPoly p(nvars);
  if (c != 0) p.terms_[ExpVec(nvars, 0)] = c;
  return p;
}

MultiPoly MultiPoly::variable(int nvars, int i) {
  if (i < 0 || i >= nvars) throw std::invalid_argument("variable index out of range");
  MultiPoly p(nvars);
  ExpVec e(nvars, 0);
  e[i] = 1;
  p.terms_[e] = 1;
  return p;
}

MultiPoly MultiPoly::from_coeffs(std::span<const Rat> coeffs) {
  MultiPoly p(1);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    if (coeffs[i] != 0) p.terms_[{static_cast<std::uint32_t>(i)}] = coeffs[i];
  return p;
}

long MultiPoly::degree() const {
  long d = -1;
  for (const auto& [e, c] : terms_) {
    long t = 0;
    for (auto k : e) t += k;
    d = std::max(d, t);
  }
  return d;
}

void MultiPoly::set_coeff(const ExpVec& e, const Rat& c) {
  if (static_cast<int>(e.size()) != nvars_) throw std::invalid_argument("exponent arity mismatch");
  if (c == 0)
    terms_.erase(e);
  else
    terms_[e] = c;
}

const Rat* MultiPoly::coeff(const ExpVec& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? nullptr : &it->second;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
  if (nvars_ != o.nvars_) throw std::invalid_argument("nvars mismatch in +");
  for (const auto& [e, c] : o.terms_) {
    Rat& slot = terms_[e];
    slot += c;
    if (slot == 0) terms_.erase(e);
  }
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) {
  if (nvars_ != o.nvars_) throw std::invalid_argument("nvars mismatch in -");
  for (const auto& [e, c] : o.terms_) {
    Rat& slot = terms_[e];
    slot -= c;
    if (slot == 0) terms_.erase(e);
  }
  return *this;
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
  if (a.nvars_ != b.nvars_) throw std::invalid_argument("nvars mismatch in *");
  MultiPoly out(a.nvars_);
  for (const auto& [ea, ca] : a.terms_)
    for (const auto& [eb, cb] : b.terms_) {
      ExpVec e(a.nvars_);
      for (int i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
      Rat& slot = out.terms_[e];
      slot += ca * cb;
      if (slot == 0) out.terms_.erase(e);
    }
  return out;
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly out(nvars_);
  for (const auto& [e, c] : terms_) out.terms_[e] = -c;
  return out;
}

MultiPoly MultiPoly::scaled(const Rat& c) const {
  MultiPoly out(nvars_);
  if (c == 0) return out;
  for (const auto& [e, k] : terms_) out.terms_[e] = k * c;
  return out;
}

MultiPoly MultiPoly::pow(unsigned e) const {
  MultiPoly acc = MultiPoly::constant(nvars_, 1);
  MultiPoly base = *this;
  while (e) {
    if (e & 1u) acc = acc * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return acc;
}

MultiPoly MultiPoly::derivative(int var) const {
  if (var < 0 || var >= nvars_) throw std::invalid_argument("derivative variable out of range");
  MultiPoly out(nvars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    ExpVec d = e;
    d[var] -= 1;
    out.terms_[d] = c * Rat(e[var]);
  }
  return out;
}

namespace {
// Shared evaluation over any field-like scalar.
template <class T>
T eval_generic(int nvars, const std::map<ExpVec, Rat>& terms, std::span<const T> x, T zero) {
  if (static_cast<int>(x.size()) != nvars)
    throw std::invalid_argument("eval: point dimension mismatch");
  // power tables up to max exponent per variable
  std::vector<std::uint32_t> maxe(nvars, 0);
  for (const auto& [e, c] : terms)
    for (int i = 0; i < nvars; ++i) maxe[i] = std::max(maxe[i], e[i]);
  std::vector<std::vector<T>> pows(nvars);
  for (int i = 0; i < nvars; ++i) {
    pows[i].resize(maxe[i] + 1);
    pows[i][0] = zero + 1;
    for (std::uint32_t k = 1; k <= maxe[i]; ++k) pows[i][k] = pows[i][k - 1] * x[i];
  }
  T acc = zero;
  for (const auto& [e, c] : terms) {
    T t = zero + 1;
    for (int i = 0; i < nvars; ++i)
      if (e[i]) t *= pows[i][e[i]];
    acc += T(c) * t;
  }
  return acc;
}
}  // namespace

Rat MultiPoly::operator()(const RatPoint& x) const {
  return eval_generic<Rat>(nvars_, terms_, std::span<const Rat>(x), Rat(0));
}

Real MultiPoly::operator()(const RealPoint& x) const {
  return eval_generic<Real>(nvars_, terms_, std::span<const Real>(x), Real(0));
}

double MultiPoly::eval_double(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != nvars_)
    throw std::invalid_argument("eval: point dimension mismatch");
  double acc = 0;
  for (const auto& [e, c] : terms_) {
    double t = to_double(c);
    for (int i = 0; i < nvars_; ++i)
      for (std::uint32_t k = 0; k < e[i]; ++k) t *= x[i];
    acc += t;
  }
  return acc;
}

Rat MultiPoly::height() const {
  Rat h(0);
  for (const auto& [e, c] : terms_) h += abs(c);
  return h;
}

nlohmann::json MultiPoly::to_json(bool decimal) const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [e, c] : terms_) {
    nlohmann::json t = nlohmann::json::array();
    t.push_back(e);
    if (decimal)
      t.push_back(to_real(c).str(40));
    else
      t.push_back(rat_to_string(c));
    terms.push_back(std::move(t));
  }
  return nlohmann::json{{"nvars", nvars_}, {"terms", std::move(terms)}};
}

MultiPoly MultiPoly::from_json(const nlohmann::json& j) {
  MultiPoly p(j.at("nvars").get<int>());
  for (const auto& t : j.at("terms")) {
    ExpVec e = t.at(0).get<ExpVec>();
    Rat c = rat_from_string(t.at(1).get<std::string>());
    p.set_coeff(e, c);
  }
  return p;
}

std::string MultiPoly::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << rat_to_string(c);
    for (int i = 0; i < nvars_; ++i)
      if (e[i]) {
        os << "*x" << (i + 1);
        if (e[i] > 1) os << "^" << e[i];
      }
  }
  return os.str();
}

namespace {
PowEval pow_eval_from_value(int sgn, const Real& av, unsigned long e) {
  PowEval out;
  if (sgn == 0) {
    out.sign = 0;
    out.log_magnitude = -std::numeric_limits<Real>::infinity();
    return out;
  }
  out.sign = (sgn < 0 && (e % 2 == 1)) ? -1 : 1;
  out.log_magnitude = Real(e) * log(av);
  return out;
}
}  // namespace

PowEval pow_eval_stable(const MultiPoly& p, const RealPoint& x, unsigned long e) {
  if (e < 1) throw std::invalid_argument("pow_eval_stable: exponent must be >= 1");
  Real v = p(x);
  int s = v > 0 ? 1 : (v < 0 ? -1 : 0);
  return pow_eval_from_value(s, abs(v), e);
}

PowEval pow_eval_stable(const MultiPoly& p, const RatPoint& x, unsigned long e) {
  if (e < 1) throw std::invalid_argument("pow_eval_stable: exponent must be >= 1");
  Rat v = p(x);  // exact sign
  return pow_eval_from_value(v.sign(), abs(to_real(v)), e);
}

}  // namespace qr
