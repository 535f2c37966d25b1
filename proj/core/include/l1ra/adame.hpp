// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "l1ra/tensor.hpp"

namespace l1ra {

// AdamE: Adam with decoupled ElasticNet regularization.
//
// Ordinary weights take a bias-corrected Adam step at the scheduled rate
// lr * schedule_scale followed by decoupled decay w -= lr * schedule_scale * l2 * w.
// Gate vectors take an Adam step at the constant rate lr_c followed by the L1
// proximal step c <- soft_threshold(c, lr_c * l1). The shrink amount does not
// pass through the adaptive denominator, so gates reach exact zeros.

enum class ParamKind { kWeight, kGate };

struct ParamRef {
  Tensor tensor;
  ParamKind kind = ParamKind::kWeight;
};

struct AdamEConfig {
  double lr = 1e-4;
  double lr_c = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double l1 = 1e-3;
  double l2 = 0.0;

  void validate() const;
};

struct Moments {
  std::vector<double> m;
  std::vector<double> v;
};

class AdamEState {
 public:
  explicit AdamEState(AdamEConfig config);

  const AdamEConfig& config() const { return config_; }
  long step_count() const { return step_count_; }

  /// Moment buffers for a parameter, or nullptr if it has not been stepped yet.
  Moments* find(const Tensor& param);
  const Moments* find(const Tensor& param) const;
  /// Creates zero moments sized to the parameter if absent.
  Moments& slot(const Tensor& param);
  void forget(const Tensor& param);

 private:
  friend void adame_step(std::span<const ParamRef> params, AdamEState& state, double schedule_scale);

  AdamEConfig config_;
  long step_count_ = 0;
  std::unordered_map<const TensorImpl*, Moments> moments_;
};

/// sign(x) * max(|x| - t, 0). Throws std::invalid_argument for t < 0.
double soft_threshold(double x, double t);

/// One optimizer step over params using their accumulated gradients (a missing
/// gradient counts as zero). The whole step is rejected with
/// std::invalid_argument on a shape mismatch or a non-finite gradient, before
/// any parameter changes.
void adame_step(std::span<const ParamRef> params, AdamEState& state, double schedule_scale = 1.0);

}  // namespace l1ra
