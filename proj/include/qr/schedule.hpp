#pragma once

#include "qr/scalar.hpp"

namespace qr {

// Root-exponent schedule for the m-step construction targeting order k:
//   step 1:      4^{m-1} (k+1)^{2m+1}
//   step s >= 2: 4^{m-j} (k+1)^{2(m-j+1)} with j = s-1
long long schedule_l(int m, int k, int step);

// Replays the exponent chain with integer arithmetic: every descent input
// exponent must be divisible by 2(k+1), each step's output class must match
// the published exponent, and the final exponent (k+1)^2 must satisfy the
// sign-recovery requirement >= k+2.
bool schedule_consistency(int m, int k);

}  // namespace qr
