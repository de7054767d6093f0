#include "qr/sturm.hpp"

#include <algorithm>
#include <stdexcept>

namespace qr {

namespace {

// Scale so the largest |coefficient| is 1; positive scaling keeps all the
// sign information Sturm needs and tames coefficient growth.
UniPoly normalized(const UniPoly& p) {
  if (p.is_zero()) return p;
  Rat m(0);
  for (const auto& c : p.coeffs()) m = std::max(m, Rat(abs(c)));
  std::vector<Rat> out(p.coeffs());
  for (auto& c : out) c /= m;
  return UniPoly(std::move(out));
}

// Remainder of a by b (degrees exact, rational arithmetic).
UniPoly remainder(const UniPoly& a, const UniPoly& b) {
  std::vector<Rat> r = a.coeffs();
  const auto& d = b.coeffs();
  long db = b.degree();
  while (static_cast<long>(r.size()) - 1 >= db) {
    long dr = static_cast<long>(r.size()) - 1;
    Rat q = r.back() / d.back();
    for (long i = 0; i <= db; ++i) r[dr - db + i] -= q * d[i];
    r.pop_back();
    while (!r.empty() && r.back() == 0) r.pop_back();
    if (r.empty()) break;
  }
  return UniPoly(std::move(r));
}

}  // namespace

SturmSequence SturmSequence::build(const UniPoly& p) {
  SturmSequence s;
  if (p.is_zero()) return s;
  s.seq_.push_back(normalized(p));
  if (p.degree() == 0) return s;
  s.seq_.push_back(normalized(p.derivative()));
  while (s.seq_.back().degree() >= 0) {
    const UniPoly& a = s.seq_[s.seq_.size() - 2];
    const UniPoly& b = s.seq_.back();
    UniPoly r = remainder(a, b);
    if (r.is_zero()) break;
    // Sturm uses the negated remainder
    std::vector<Rat> neg(r.coeffs());
    for (auto& c : neg) c = -c;
    s.seq_.push_back(normalized(UniPoly(std::move(neg))));
    if (s.seq_.back().degree() == 0) break;
  }
  return s;
}

int SturmSequence::variations(const Rat& x) const {
  int v = 0, last = 0;
  for (const auto& p : seq_) {
    Rat val = p(x);
    int s = val.sign();
    if (s == 0) continue;
    if (last != 0 && s != last) ++v;
    last = s;
  }
  return v;
}

int SturmSequence::count_roots(const Rat& a, const Rat& b) const {
  if (seq_.empty()) return 0;
  return variations(a) - variations(b);
}

std::vector<IsolatedRoot> isolate_roots(const UniPoly& p, const Rat& a, const Rat& b,
                                        const Rat& width) {
  std::vector<IsolatedRoot> out;
  if (p.is_zero()) throw std::invalid_argument("isolate_roots: zero polynomial");
  SturmSequence sturm = SturmSequence::build(p);
  // nudge endpoints off roots
  Rat lo = a, hi = b;
  Rat pad = (b - a) / 1000000;
  int guard = 0;
  while (p(lo) == 0 && guard++ < 64) lo -= pad;
  guard = 0;
  while (p(hi) == 0 && guard++ < 64) hi += pad;

  struct Item {
    Rat lo, hi;
    int count;
  };
  std::vector<Item> stack{{lo, hi, sturm.count_roots(lo, hi)}};
  int depth_limit = 200 * (stack[0].count + 2);  // ~log2(range/width) splits per root
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (it.count == 0) continue;
    if (it.count == 1 && it.hi - it.lo <= width) {
      out.push_back(IsolatedRoot{it.lo, it.hi, (it.lo + it.hi) / 2});
      continue;
    }
    if (--depth_limit < 0)
      throw std::runtime_error("isolate_roots: isolation stalled (clustered roots?)");
    Rat mid = (it.lo + it.hi) / 2;
    guard = 0;
    while (p(mid) == 0 && guard++ < 64) mid += (it.hi - it.lo) / 1048576;
    int left = sturm.count_roots(it.lo, mid);
    stack.push_back({it.lo, mid, left});
    stack.push_back({mid, it.hi, it.count - left});
  }
  std::sort(out.begin(), out.end(),
            [](const IsolatedRoot& x, const IsolatedRoot& y) { return x.approx < y.approx; });
  return out;
}

}  // namespace qr
