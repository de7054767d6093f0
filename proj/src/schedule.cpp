#include "qr/schedule.hpp"

#include <stdexcept>

namespace qr {

namespace {
Int ipow(Int b, int e) {
  Int acc(1);
  for (int i = 0; i < e; ++i) acc *= b;
  return acc;
}

Int schedule_l_big(int m, int k, int step) {
  if (m < 1 || k < 1) throw std::invalid_argument("schedule_l: need m, k >= 1");
  if (step < 1 || step > m) throw std::out_of_range("schedule_l: step out of range 1..m");
  if (step == 1) return ipow(4, m - 1) * ipow(k + 1, 2 * m + 1);
  int j = step - 1;
  return ipow(4, m - j) * ipow(k + 1, 2 * (m - j + 1));
}
}  // namespace

long long schedule_l(int m, int k, int step) {
  Int v = schedule_l_big(m, k, step);
  if (v > Int(std::numeric_limits<long long>::max()))
    throw std::overflow_error("schedule_l: exponent exceeds 64-bit range");
  return v.convert_to<long long>();
}

bool schedule_consistency(int m, int k) {
  if (m < 1 || k < 1) return false;
  Int K(k + 1);
  Int two_K = 2 * K;

  // step 1: inputs at exponent 2*l1, sum-descent divides by 2(k+1)
  Int l1 = schedule_l_big(m, k, 1);
  if (l1 < k + 2) return false;  // sign recovery needs l >= (k+1)+1
  Int in1 = 2 * l1;
  if (in1 % two_K != 0) return false;
  Int v2_class = in1 / two_K;
  if (v2_class != ipow(4, m - 1) * ipow(K, 2 * m)) return false;

  Int prev_class = v2_class;  // class exponent of v-bar_{j+1} entering step j+1
  for (int j = 1; j <= m - 1; ++j) {
    Int l_step = schedule_l_big(m, k, j + 1);
    if (l_step < k + 2) return false;
    // the published class of the inputs consumed by this step
    if (l_step != ipow(4, m - j) * ipow(K, 2 * (m - j + 1))) return false;
    if (prev_class != l_step) return false;
    // square-over-sum at exponent l_step
    if (l_step % two_K != 0) return false;
    Int mid = l_step / two_K;  // class of v^2/(4 alpha)
    if (mid != 2 * ipow(4, m - j - 1) * ipow(K, 2 * (m - j + 1) - 1)) return false;
    // summation combining gammabar*Abar/2, vbar/2 (class l_step) and the
    // quotient term (class mid); common exponent is 2(k+1) * next_class
    Int next_class = ipow(4, m - j - 1) * ipow(K, 2 * (m - j));
    Int sum_in = two_K * next_class;
    if (sum_in != mid) return false;
    if (l_step % sum_in != 0) return false;
    prev_class = next_class;
  }
  // after step m the chain ends at (k+1)^2, which must cover sign recovery
  if (prev_class != ipow(K, 2)) return false;
  return prev_class >= k + 2;
}

}  // namespace qr
