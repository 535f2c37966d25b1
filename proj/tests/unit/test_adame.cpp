// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "l1ra/adame.hpp"
#include "l1ra/errors.hpp"
#include "reference_optim.hpp"

namespace l1ra {
namespace {

TEST(SoftThreshold, Examples) {
  EXPECT_NEAR(soft_threshold(0.005, 1e-5), 0.00499, 1e-18);
  EXPECT_EQ(soft_threshold(5e-6, 1e-5), 0.0);
  EXPECT_EQ(soft_threshold(-5e-6, 1e-5), 0.0);
  EXPECT_EQ(soft_threshold(-0.3, 0.1), -0.3 + 0.1);
  EXPECT_EQ(soft_threshold(0.123, 0.0), 0.123);
  EXPECT_THROW(soft_threshold(1.0, -1e-9), std::invalid_argument);
}

// Random convex quadratic 0.5 (w - t)' D (w - t) with a diagonal D > 0.
struct Quadratic {
  std::vector<double> diag;
  std::vector<double> target;

  Quadratic(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      diag.push_back(0.1 + 2.0 * rng.uniform());
      target.push_back(rng.normal());
    }
  }
  std::vector<double> grad(std::span<const double> w) const {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = diag[i] * (w[i] - target[i]);
    return g;
  }
};

void set_grad(Tensor& t, const std::vector<double>& g) {
  auto dst = t.grad();
  std::copy(g.begin(), g.end(), dst.begin());
}

void run_equivalence(double l2, double tol) {
  for (std::uint64_t problem = 0; problem < 10; ++problem) {
    const std::size_t n = 12;
    const Quadratic qw(n, 1000 + problem);
    const Quadratic qc(4, 2000 + problem);
    const AdamEConfig cfg{.lr = 3e-2, .lr_c = 1e-2, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8, .l1 = 0.0, .l2 = l2};
    Tensor w = test::random_tensor({3, 4}, 3000 + problem, 1.0, true);
    Tensor c = Tensor::full({4}, 1.0, true);
    std::vector<double> ref_w(w.data().begin(), w.data().end());
    std::vector<double> ref_c(c.data().begin(), c.data().end());
    oracle::ReferenceAdamW opt_w{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, l2, {}, {}};
    oracle::ReferenceAdamW opt_c{cfg.lr_c, cfg.beta1, cfg.beta2, cfg.eps, 0.0, {}, {}};
    AdamEState state(cfg);
    const std::vector<ParamRef> params{{w, ParamKind::kWeight}, {c, ParamKind::kGate}};
    for (int step = 0; step < 100; ++step) {
      set_grad(w, qw.grad(w.data()));
      set_grad(c, qc.grad(c.data()));
      adame_step(params, state);
      opt_w.step(ref_w, qw.grad(ref_w));
      opt_c.step(ref_c, qc.grad(ref_c));
      for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(w[i], ref_w[i], tol) << "step " << step;
      for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(c[i], ref_c[i], tol) << "step " << step;
    }
  }
}

TEST(AdamE, NoRegularizationIsPlainAdam) { run_equivalence(0.0, 1e-15); }

TEST(AdamE, ZeroL1IsAdamW) { run_equivalence(0.05, 1e-12); }

TEST(AdamE, ScheduleScalesWeightsButNotGates) {
  const AdamEConfig cfg{.lr = 1e-2, .lr_c = 1e-2, .l1 = 0.0};
  Tensor w = Tensor::full({1}, 0.0, true);
  Tensor c = Tensor::full({1}, 0.0, true);
  AdamEState state(cfg);
  w.grad()[0] = 1.0;
  c.grad()[0] = 1.0;
  const std::vector<ParamRef> params{{w, ParamKind::kWeight}, {c, ParamKind::kGate}};
  adame_step(params, state, 0.25);
  // First Adam step moves by lr * g / (|g| + eps).
  EXPECT_NEAR(w[0], -0.25 * 1e-2 / (1.0 + 1e-8), 1e-16);
  EXPECT_NEAR(c[0], -1e-2 / (1.0 + 1e-8), 1e-16);
  EXPECT_THROW(adame_step(params, state, 1.5), std::invalid_argument);
}

TEST(AdamE, PureShrinkageMatchesScalarOracle) {
  // lr_c * l1 = 1e-5: the exact-arithmetic answer is 1e5 steps; in binary
  // floating point the repeated subtraction leaves a sub-ulp residue that
  // needs one more step.
  const AdamEConfig cfg{.lr = 1e-4, .lr_c = 1e-2, .l1 = 1e-3};
  const double t = cfg.lr_c * cfg.l1;
  const long oracle_step = oracle::steps_to_zero(1.0, t, 200000);
  ASSERT_GT(oracle_step, 0);
  EXPECT_LE(std::abs(oracle_step - 100000L), 1);

  Tensor c = Tensor::full({1}, 1.0, true);
  AdamEState state(cfg);
  const std::vector<ParamRef> params{{c, ParamKind::kGate}};
  double prev = 1.0;
  long zero_step = -1;
  for (long s = 1; s <= 200000 && zero_step < 0; ++s) {
    c.zero_grad();
    adame_step(params, state);
    if (c[0] != 0.0) {
      EXPECT_NEAR(prev - c[0], t, 1e-15);
    }
    prev = c[0];
    if (c[0] == 0.0) zero_step = s;
  }
  EXPECT_EQ(zero_step, oracle_step);
}

TEST(AdamE, DyadicShrinkageIsExact) {
  // 2^-7 * 2^-3 = 2^-10: every intermediate is representable.
  const AdamEConfig cfg{.lr_c = 0x1.0p-7, .l1 = 0x1.0p-3};
  Tensor c = Tensor::full({2}, 1.0, true);
  c[1] = -1.0;
  AdamEState state(cfg);
  const std::vector<ParamRef> params{{c, ParamKind::kGate}};
  for (int s = 1; s <= 1024; ++s) {
    c.zero_grad();
    adame_step(params, state);
    if (s < 1024) {
      ASSERT_EQ(c[0], 1.0 - s * 0x1.0p-10);
      ASSERT_EQ(c[1], -(1.0 - s * 0x1.0p-10));
    }
  }
  EXPECT_EQ(c[0], 0.0);
  EXPECT_EQ(c[1], 0.0);
}

TEST(AdamE, AcceptanceShrinkageReachesZeroAtStep1000) {
  const AdamEConfig cfg{.lr_c = 1e-2, .l1 = 1e-1};
  Tensor c = Tensor::full({1}, 1.0, true);
  AdamEState state(cfg);
  const std::vector<ParamRef> params{{c, ParamKind::kGate}};
  for (int s = 1; s <= 999; ++s) {
    c.zero_grad();
    adame_step(params, state);
  }
  EXPECT_GT(c[0], 0.0);
  c.zero_grad();
  adame_step(params, state);
  EXPECT_EQ(c[0], 0.0);
}

TEST(AdamE, ShrinkIsIndependentOfGradientScale) {
  for (double g : {0.3, 0.6, 50.0}) {
    const AdamEConfig with_l1{.lr_c = 1e-2, .l1 = 0.2};
    AdamEConfig without_l1 = with_l1;
    without_l1.l1 = 0.0;
    Tensor c1 = Tensor::full({1}, 1.0, true);
    Tensor c2 = Tensor::full({1}, 1.0, true);
    AdamEState s1(with_l1), s2(without_l1);
    for (int step = 0; step < 5; ++step) {
      c1.grad()[0] = g;
      c2.grad()[0] = g;
      adame_step(std::vector<ParamRef>{{c1, ParamKind::kGate}}, s1);
      adame_step(std::vector<ParamRef>{{c2, ParamKind::kGate}}, s2);
      // Same Adam displacement (same gradient history); the gap is the accumulated shrink.
      EXPECT_NEAR(c2[0] - c1[0], (step + 1) * 2e-3, 1e-12);
    }
  }
}

TEST(AdamE, RejectsNonFiniteGradientWithoutSideEffects) {
  Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor c = Tensor::from({1}, {0.5}, true);
  AdamEState state(AdamEConfig{});
  w.grad()[0] = 1.0;
  c.grad()[0] = std::numeric_limits<double>::quiet_NaN();
  const std::vector<ParamRef> params{{w, ParamKind::kWeight}, {c, ParamKind::kGate}};
  EXPECT_THROW(adame_step(params, state), std::invalid_argument);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(c[0], 0.5);
  EXPECT_EQ(state.step_count(), 0);
  EXPECT_EQ(state.find(w), nullptr);
}

TEST(AdamE, MomentsTrackParameterSize) {
  Tensor w = Tensor::from({2}, {1.0, 2.0}, true);
  AdamEState state(AdamEConfig{});
  w.grad()[0] = -3.0;
  adame_step(std::vector<ParamRef>{{w, ParamKind::kWeight}}, state);
  const Moments* mom = state.find(w);
  ASSERT_NE(mom, nullptr);
  EXPECT_EQ(mom->m.size(), 2u);
  for (double v : mom->v) EXPECT_GE(v, 0.0);
  w.reset({3}, {1, 2, 3});
  EXPECT_THROW(adame_step(std::vector<ParamRef>{{w, ParamKind::kWeight}}, state), InvariantError);
  state.forget(w);
  EXPECT_NO_THROW(adame_step(std::vector<ParamRef>{{w, ParamKind::kWeight}}, state));
}

TEST(AdamEConfig, Validation) {
  EXPECT_THROW(AdamEState(AdamEConfig{.lr = -1.0}), ConfigError);
  EXPECT_THROW(AdamEState(AdamEConfig{.beta1 = 1.0}), ConfigError);
  EXPECT_THROW(AdamEState(AdamEConfig{.eps = 0.0}), ConfigError);
  EXPECT_THROW(AdamEState(AdamEConfig{.l1 = -1e-3}), ConfigError);
}

}  // namespace
}  // namespace l1ra
