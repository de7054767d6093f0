// Certified univariate real-root counting and isolation over exact
// rationals: Sturm sequences for counts, bisection on variation counts for
// isolating intervals.

#pragma once

#include "qr/unipoly.hpp"

#include <utility>
#include <vector>

namespace qr {

class SturmSequence {
 public:
  static SturmSequence build(const UniPoly& p);

  // Distinct real roots in (a, b]; endpoints with p = 0 are handled by the
  // caller nudging them.
  int count_roots(const Rat& a, const Rat& b) const;
  int variations(const Rat& x) const;
  const std::vector<UniPoly>& sequence() const { return seq_; }

 private:
  std::vector<UniPoly> seq_;
};

struct IsolatedRoot {
  Rat lo, hi;   // open interval containing exactly one distinct root
  Rat approx;   // midpoint after refinement
};

// Isolates all distinct real roots of p inside (a, b), refining each
// isolating interval below `width`.  Throws std::runtime_error if isolation
// stalls (clustered/multiple roots beyond the depth limit).
std::vector<IsolatedRoot> isolate_roots(const UniPoly& p, const Rat& a, const Rat& b,
                                        const Rat& width);

}  // namespace qr
