// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "l1ra/tensor.hpp"

namespace l1ra {

using ScalarFn = std::function<Tensor(Tape&)>;

/// Compares the tape gradient of f with respect to x against central
/// differences of step eps. Returns the worst elementwise relative error,
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
///
/// f must read x through the captured handle and be deterministic. x must
/// require a gradient; its grad buffer is overwritten.
double grad_check(const ScalarFn& f, Tensor x, double eps = 1e-5);

}  // namespace l1ra
