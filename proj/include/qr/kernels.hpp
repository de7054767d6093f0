// The three fractional-power kernels behind the descent combinators:
//
//   F(y_1..y_p) = (y_1^{2kl} + ... + y_p^{2kl})^{1/l}
//   G(x, y)     = x^{2k} y^{2k} / (x^{2kl} + y^{2kl})^{1/l}
//   H(x, y)     = x^{4k}        / (x^{2kl} + y^{2kl})^{1/l}
//
// each extended by 0 at the origin.  Partial derivatives away from the
// origin are computed exactly as sums of closed-form terms
// c * S^{q} * prod y_i^{e_i} (S the inner power sum, q = +-1/l - t), which is
// the same term algebra the per-term decay bounds are stated in.

#pragma once

#include "qr/scalar.hpp"

#include <vector>

namespace qr {

enum class KernelKind { F, G, H };

struct KernelSpec {
  KernelKind kind;
  int k = 1;      // certified smoothness order
  long l = 1;     // root exponent
  int arity = 2;  // p >= 1 for F; fixed 2 for G and H

  int vars() const { return kind == KernelKind::F ? arity : 2; }
  long inner_exponent() const { return 2L * k * l; }  // 2kl
  void validate() const;
};

// One symbolic term of a partial-derivative expansion.
struct SymTerm {
  Rat coeff;
  long t = 0;           // S-exponent is s_base - t with s_base = +-1/l
  std::vector<long> e;  // integer exponents on y_1..y_p
};

// Spec-shape enumeration term (t, s_i, m_i); the variable exponents are
// derived from the kind-specific rule:
//   F:  e_i = (2kl-1) s_i - m_i
//   G:  e_i = (2kl-1) s_i + 2k - m_i
//   H:  e_1 = (2kl-1) s_1 + 4k - m_1,  e_2 = (2kl-1) s_2 - m_2
struct DerivativeTerm {
  long t = 0;
  std::vector<long> s, m;
  Rat constant = 1;

  int order() const {
    long j = 0;
    for (auto v : s) j += v;
    for (auto v : m) j += v;
    return static_cast<int>(j);
  }
};

Real kernel_eval(const KernelSpec& spec, const RealPoint& y);

// Exact symbolic expansion of the partial derivative for the given
// multi-index (cached per (spec, index)).
const std::vector<SymTerm>& kernel_expansion(const KernelSpec& spec,
                                             const std::vector<int>& multi_index);

// Analytic partial derivative at y != 0, |multi_index| <= k.
Real kernel_partial_analytic(const KernelSpec& spec, const std::vector<int>& multi_index,
                             const RealPoint& y);

// Returns exactly 0 (the derivative vanishes at the origin) after checking
// that the finite-difference estimate shrinks as h does; throws
// std::logic_error if that sanity check ever fails.
Real kernel_partial_at_zero(const KernelSpec& spec, const std::vector<int>& multi_index);

// Variable exponents of an enumeration term under the kind rule, or empty if
// the term is invalid (some exponent negative).
std::vector<long> term_exponents(const KernelSpec& spec, const DerivativeTerm& term);

// |term value without its constant| <= p * max_i|y_i|^{2k-j}   (kind F)
//                                    <= max(|x|,|y|)^{2k-j}     (kinds G, H)
bool term_bound_check(const KernelSpec& spec, const DerivativeTerm& term, const RealPoint& y);

// All valid (t, s, m) tuples of derivative order j.
std::vector<DerivativeTerm> enumerate_terms(const KernelSpec& spec, int order_j);

}  // namespace qr
