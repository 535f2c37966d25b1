// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

namespace l1ra::oracle {

// Textbook AdamW on a flat vector: bias-corrected Adam move, then decoupled
// decay w -= lr * wd * w on the moved weights.
struct ReferenceAdamW {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double weight_decay;
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;

  void step(std::vector<double>& w, const std::vector<double>& g) {
    if (m.empty()) {
      m.assign(w.size(), 0.0);
      v.assign(w.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
      const double vh = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
      w[i] -= lr * mh / (std::sqrt(vh) + eps);
      w[i] -= lr * weight_decay * w[i];
    }
  }
};

// Repeated proximal L1 steps on a scalar with zero loss gradient:
// c <- sign(c) * max(|c| - t, 0). Returns the first step at which c is exactly
// zero, or -1 if that does not happen within max_steps.
inline long steps_to_zero(double c0, double t, long max_steps) {
  double c = c0;
  for (long s = 1; s <= max_steps; ++s) {
    const double mag = std::fabs(c) - t;
    c = mag <= 0.0 ? 0.0 : std::copysign(mag, c);
    if (c == 0.0) return s;
  }
  return -1;
}

}  // namespace l1ra::oracle
