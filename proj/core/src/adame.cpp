// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/adame.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "l1ra/errors.hpp"

namespace l1ra {

void AdamEConfig::validate() const {
  if (!(lr >= 0.0) || !(lr_c >= 0.0)) throw ConfigError("adame: learning rates must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adame: betas must be in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adame: eps must be positive");
  if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw ConfigError("adame: regularization coefficients must be non-negative");
}

AdamEState::AdamEState(AdamEConfig config) : config_(config) { config_.validate(); }

Moments* AdamEState::find(const Tensor& param) {
  auto it = moments_.find(param.id());
  return it == moments_.end() ? nullptr : &it->second;
}

const Moments* AdamEState::find(const Tensor& param) const {
  auto it = moments_.find(param.id());
  return it == moments_.end() ? nullptr : &it->second;
}

Moments& AdamEState::slot(const Tensor& param) {
  auto& mom = moments_[param.id()];
  if (mom.m.size() != param.numel()) {
    if (!mom.m.empty()) {
      throw InvariantError("adame: moments for a parameter of shape " + shape_str(param.shape()) +
                           " are out of sync (" + std::to_string(mom.m.size()) + " entries)");
    }
    mom.m.assign(param.numel(), 0.0);
    mom.v.assign(param.numel(), 0.0);
  }
  return mom;
}

void AdamEState::forget(const Tensor& param) { moments_.erase(param.id()); }

double soft_threshold(double x, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  const double mag = std::abs(x) - t;
  if (mag <= 0.0) return 0.0;
  return x < 0.0 ? -mag : mag;
}

void adame_step(std::span<const ParamRef> params, AdamEState& state, double schedule_scale) {
  const AdamEConfig& cfg = state.config_;
  if (!(schedule_scale >= 0.0 && schedule_scale <= 1.0)) {
    throw std::invalid_argument("adame_step: schedule_scale must be in [0, 1]");
  }
  for (const auto& p : params) {
    const auto g = p.tensor.grad();
    if (!g.empty() && g.size() != p.tensor.numel()) {
      throw std::invalid_argument("adame_step: gradient size " + std::to_string(g.size()) +
                                  " does not match parameter " + shape_str(p.tensor.shape()));
    }
    for (double v : g) {
      if (!std::isfinite(v)) throw std::invalid_argument("adame_step: non-finite gradient, step rejected");
    }
  }

  ++state.step_count_;
  const double t = static_cast<double>(state.step_count_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double lr_weights = cfg.lr * schedule_scale;
  const double shrink = cfg.lr_c * cfg.l1;

  for (const auto& p : params) {
    Tensor param = p.tensor;
    Moments& mom = state.slot(param);
    const auto g = std::as_const(param).grad();
    auto w = param.data();
    const bool gate = p.kind == ParamKind::kGate;
    const double lr = gate ? cfg.lr_c : lr_weights;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * gi;
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      if (gate) {
        w[i] = soft_threshold(w[i], shrink);
      } else if (cfg.l2 > 0.0) {
        w[i] -= lr_weights * cfg.l2 * w[i];
      }
    }
  }
}

}  // namespace l1ra
