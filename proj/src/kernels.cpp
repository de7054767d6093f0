#include "qr/kernels.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace qr {

void KernelSpec::validate() const {
  if (k < 1 || l < 1) throw std::invalid_argument("KernelSpec: need k >= 1, l >= 1");
  if (kind == KernelKind::F) {
    if (arity < 1) throw std::invalid_argument("KernelSpec: F needs arity >= 1");
  } else if (arity != 2) {
    throw std::invalid_argument("KernelSpec: G and H are binary");
  }
}

namespace {

bool is_origin(const RealPoint& y) {
  for (const auto& v : y)
    if (v != 0) return false;
  return true;
}

Real power_sum(const KernelSpec& spec, const RealPoint& y) {
  Real s = 0;
  unsigned e = static_cast<unsigned>(spec.inner_exponent());
  for (const auto& v : y) s += pow(v, static_cast<int>(e));
  return s;
}

Real int_pow(const Real& x, long e) {
  if (e == 0) return Real(1);
  return pow(x, static_cast<int>(e));
}

// S^q for rational q and S > 0.
Real frac_pow(const Real& s, const Rat& q) {
  if (q == 0) return Real(1);
  if (denominator(q) == 1) return int_pow(s, q.convert_to<long>());
  return exp(to_real(q) * log(s));
}

}  // namespace

Real kernel_eval(const KernelSpec& spec, const RealPoint& y) {
  spec.validate();
  if (static_cast<int>(y.size()) != spec.vars())
    throw std::invalid_argument("kernel_eval: arity mismatch");
  if (is_origin(y)) return Real(0);
  Real s = power_sum(spec, y);
  Rat invl(1, spec.l);
  switch (spec.kind) {
    case KernelKind::F:
      return frac_pow(s, invl);
    case KernelKind::G:
      return int_pow(y[0], 2 * spec.k) * int_pow(y[1], 2 * spec.k) / frac_pow(s, invl);
    case KernelKind::H:
      return int_pow(y[0], 4 * spec.k) / frac_pow(s, invl);
  }
  throw std::logic_error("unreachable");
}

namespace {

std::vector<SymTerm> differentiate(const KernelSpec& spec, const std::vector<SymTerm>& in,
                                   int var) {
  long step = spec.inner_exponent() - 1;  // 2kl - 1
  long bump = spec.inner_exponent();      // d/dy (y^{2kl}) = 2kl y^{2kl-1}
  Rat s_base = (spec.kind == KernelKind::F) ? Rat(1, spec.l) : Rat(-1, spec.l);
  std::map<std::pair<long, std::vector<long>>, Rat> acc;
  auto add = [&](Rat c, long t, std::vector<long> e) {
    if (c == 0) return;
    auto key = std::make_pair(t, std::move(e));
    Rat& slot = acc[key];
    slot += c;
    if (slot == 0) acc.erase(key);
  };
  for (const auto& term : in) {
    // chain rule through S^{s_base - t}
    Rat q = s_base - term.t;
    if (q != 0) {
      std::vector<long> e = term.e;
      e[var] += step;
      add(term.coeff * q * bump, term.t + 1, std::move(e));
    }
    // product rule through y_var^{e_var}
    if (term.e[var] != 0) {
      std::vector<long> e = term.e;
      e[var] -= 1;
      add(term.coeff * term.e[var], term.t, std::move(e));
    }
  }
  std::vector<SymTerm> out;
  out.reserve(acc.size());
  for (auto& [key, c] : acc) out.push_back(SymTerm{c, key.first, key.second});
  return out;
}

std::vector<SymTerm> base_term(const KernelSpec& spec) {
  std::vector<long> e(spec.vars(), 0);
  if (spec.kind == KernelKind::G) {
    e[0] = 2 * spec.k;
    e[1] = 2 * spec.k;
  } else if (spec.kind == KernelKind::H) {
    e[0] = 4 * spec.k;
  }
  return {SymTerm{Rat(1), 0, std::move(e)}};
}

struct CacheKey {
  int kind, k, arity;
  long l;
  std::vector<int> idx;
  auto operator<=>(const CacheKey&) const = default;
};

}  // namespace

const std::vector<SymTerm>& kernel_expansion(const KernelSpec& spec,
                                             const std::vector<int>& multi_index) {
  spec.validate();
  if (static_cast<int>(multi_index.size()) != spec.vars())
    throw std::invalid_argument("kernel_expansion: multi-index arity mismatch");
  static std::map<CacheKey, std::vector<SymTerm>> cache;
  static std::mutex mu;
  CacheKey key{static_cast<int>(spec.kind), spec.k, spec.arity, spec.l, multi_index};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<SymTerm> terms = base_term(spec);
  for (int v = 0; v < spec.vars(); ++v)
    for (int rep = 0; rep < multi_index[v]; ++rep) terms = differentiate(spec, terms, v);
  return cache.emplace(std::move(key), std::move(terms)).first->second;
}

Real kernel_partial_analytic(const KernelSpec& spec, const std::vector<int>& multi_index,
                             const RealPoint& y) {
  int order = 0;
  for (int v : multi_index) order += v;
  if (order > spec.k)
    throw std::invalid_argument("kernel_partial_analytic: order exceeds k");
  if (is_origin(y))
    throw std::invalid_argument("kernel_partial_analytic: use kernel_partial_at_zero at 0");
  const auto& terms = kernel_expansion(spec, multi_index);
  Real s = power_sum(spec, y);
  Rat s_base = (spec.kind == KernelKind::F) ? Rat(1, spec.l) : Rat(-1, spec.l);
  Real acc = 0;
  for (const auto& term : terms) {
    Real v = to_real(term.coeff) * frac_pow(s, s_base - term.t);
    for (int i = 0; i < spec.vars(); ++i)
      if (term.e[i]) v *= int_pow(y[i], term.e[i]);
    acc += v;
  }
  return acc;
}

namespace {

// Nested central differences of kernel_eval, used only for the vanishing
// check at the origin.
Real fd_partial(const KernelSpec& spec, const std::vector<int>& multi_index,
                const RealPoint& y, const Real& h) {
  int var = -1;
  for (std::size_t i = 0; i < multi_index.size(); ++i)
    if (multi_index[i] > 0) {
      var = static_cast<int>(i);
      break;
    }
  if (var < 0) return kernel_eval(spec, y);
  std::vector<int> lower = multi_index;
  lower[var] -= 1;
  RealPoint yp = y, ym = y;
  yp[var] += h;
  ym[var] -= h;
  return (fd_partial(spec, lower, yp, h) - fd_partial(spec, lower, ym, h)) / (2 * h);
}

}  // namespace

Real kernel_partial_at_zero(const KernelSpec& spec, const std::vector<int>& multi_index) {
  spec.validate();
  int order = 0;
  for (int v : multi_index) order += v;
  if (order > spec.k)
    throw std::invalid_argument("kernel_partial_at_zero: order exceeds k");
  RealPoint origin(spec.vars(), Real(0));
  Real h1("1e-2"), h2("1e-3");
  Real e1 = abs(fd_partial(spec, multi_index, origin, h1));
  Real e2 = abs(fd_partial(spec, multi_index, origin, h2));
  // |d^j| ~ max|y|^{2k-j} near 0, so shrinking h by 10 must shrink the
  // estimate by at least 10^{2k-j} >= 10 (up to a guard for exact zeros).
  if (!(e2 <= e1 / 2 + Real("1e-40"))) {
    std::ostringstream msg;
    msg << "kernel_partial_at_zero: FD estimate failed to vanish (|FD(h=1e-2)|=" << e1
        << ", |FD(h=1e-3)|=" << e2 << ")";
    throw std::logic_error(msg.str());
  }
  return Real(0);
}

std::vector<long> term_exponents(const KernelSpec& spec, const DerivativeTerm& term) {
  int p = spec.vars();
  long step = spec.inner_exponent() - 1;
  std::vector<long> e(p);
  for (int i = 0; i < p; ++i) {
    long extra = 0;
    if (spec.kind == KernelKind::G) extra = 2 * spec.k;
    if (spec.kind == KernelKind::H) extra = (i == 0) ? 4 * spec.k : 0;
    e[i] = step * term.s[i] + extra - term.m[i];
    if (e[i] < 0) return {};
  }
  return e;
}

bool term_bound_check(const KernelSpec& spec, const DerivativeTerm& term, const RealPoint& y) {
  spec.validate();
  if (is_origin(y)) throw std::invalid_argument("term_bound_check: need y != 0");
  auto e = term_exponents(spec, term);
  if (e.empty()) throw std::invalid_argument("term_bound_check: invalid term exponents");
  int j = term.order();
  Real s = power_sum(spec, y);
  Rat s_base = (spec.kind == KernelKind::F) ? Rat(1, spec.l) : Rat(-1, spec.l);
  Real value = frac_pow(s, s_base - term.t);
  for (int i = 0; i < spec.vars(); ++i) value *= int_pow(abs(y[i]), e[i]);
  Real maxy = 0;
  for (const auto& v : y) maxy = std::max(maxy, abs(v));
  Real bound = int_pow(maxy, 2L * spec.k - j);
  if (spec.kind == KernelKind::F) bound *= spec.arity;
  // tiny slack for the fractional-power rounding
  return abs(value) <= bound * (1 + Real("1e-50"));
}

std::vector<DerivativeTerm> enumerate_terms(const KernelSpec& spec, int order_j) {
  spec.validate();
  int p = spec.vars();
  std::vector<DerivativeTerm> out;
  std::vector<long> s(p), m(p);
  // all splittings s_1+..+s_p = t, m_1+..+m_p = j - t, 0 <= t <= j
  std::function<void(int, long, bool)> fill_m = [&](int pos, long left, bool) {
    if (pos == p - 1) {
      m[pos] = left;
      DerivativeTerm term{0, s, m, Rat(1)};
      for (int i = 0; i < p; ++i) term.t += s[i];
      if (!term_exponents(spec, term).empty()) out.push_back(term);
      return;
    }
    for (long v = 0; v <= left; ++v) {
      m[pos] = v;
      fill_m(pos + 1, left - v, true);
    }
  };
  std::function<void(int, long, long)> fill_s = [&](int pos, long left, long j_minus_t) {
    if (pos == p - 1) {
      s[pos] = left;
      fill_m(0, j_minus_t, true);
      return;
    }
    for (long v = 0; v <= left; ++v) {
      s[pos] = v;
      fill_s(pos + 1, left - v, j_minus_t);
    }
  };
  for (long t = 0; t <= order_j; ++t) fill_s(0, t, order_j - t);
  return out;
}

}  // namespace qr
