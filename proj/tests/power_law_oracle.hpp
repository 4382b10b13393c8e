#pragma once

#include "ehrse/kalman.hpp"

namespace ehrse::test {

// Closed-form stationary power law of a threshold policy with r0 < r1, written
// out case by case from the stationary pair distribution q (index 2b + e).
inline Vector power_law_oracle(const Vector& q, int r0, int r1, int b_max) {
  Vector w = Vector::Zero(b_max + 1);
  for (int i = 0; i <= b_max; ++i) {
    if (i < r0) {
      w(i) = q(2 * i) + q(2 * i + 1);
    } else if (i == r0) {
      for (int m = r0; m <= b_max; ++m) w(i) += q(2 * m);
      w(i) += q(2 * r0 + 1);
    } else if (i < r1) {
      w(i) = q(2 * i + 1);
    } else if (i == r1) {
      for (int m = r1; m <= b_max; ++m) w(i) += q(2 * m + 1);
    }
  }
  return w;
}

}  // namespace ehrse::test
