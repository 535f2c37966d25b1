// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "l1ra/errors.hpp"

namespace l1ra {
namespace {

double evaluate(const ScalarFn& f) {
  Tape tape;
  const Tensor out = f(tape);
  if (out.numel() != 1) throw DimensionError("grad_check: function output " + shape_str(out.shape()) + " is not scalar");
  return out.item();
}

}  // namespace

double grad_check(const ScalarFn& f, Tensor x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  if (!x.requires_grad()) throw std::invalid_argument("grad_check: x does not require a gradient");

  x.clear_grad();
  std::vector<double> analytic;
  {
    Tape tape;
    const Tensor out = f(tape);
    if (out.numel() != 1) {
      throw DimensionError("grad_check: function output " + shape_str(out.shape()) + " is not scalar");
    }
    tape.backward(out);
    const auto g = x.grad();
    analytic.assign(g.begin(), g.end());
  }

  double worst = 0.0;
  auto values = x.data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double plus = evaluate(f);
    values[i] = saved - eps;
    const double minus = evaluate(f);
    values[i] = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace l1ra
