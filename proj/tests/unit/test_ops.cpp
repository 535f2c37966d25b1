// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "l1ra/errors.hpp"
#include "l1ra/grad_check.hpp"
#include "l1ra/ops.hpp"

namespace l1ra {
namespace {

using test::random_tensor;

// Weighted sum with fixed random weights, so every output element gets a
// distinct, non-trivial upstream gradient.
Tensor probe_loss(Tape& t, const Tensor& y, std::uint64_t seed = 99) {
  const Tensor w = random_tensor(y.shape(), seed);
  return sum(t, mul(t, y, w));
}

TEST(Matmul, IdentityAndHandExample) {
  const Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  const Tensor m = Tensor::from({2, 2}, {1.5, -2, 3, 0.25});
  Tape t;
  const Tensor y = matmul(t, eye, m);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(y[i], m[i]);

  const Tensor r = matmul(t, Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4}));
  EXPECT_EQ(r.shape(), (Shape{1, 1}));
  EXPECT_EQ(r[0], 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape t;
  try {
    matmul(t, Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2 x 3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  Tensor a = random_tensor({3, 4}, 1, 1.0, true);
  Tensor b = random_tensor({4, 2}, 2, 1.0, true);
  EXPECT_LT(grad_check([&](Tape& t) { return sum(t, matmul(t, a, b)); }, a), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return sum(t, matmul(t, a, b)); }, b), 1e-6);
}

TEST(Elementwise, Identities) {
  const Tensor x = random_tensor({2, 3}, 3);
  Tape t;
  const Tensor y = add(t, x, Tensor::zeros({2, 3}));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], x[i]);
  EXPECT_EQ(silu(t, Tensor::scalar(0.0)).item(), 0.0);
  EXPECT_EQ(gelu(t, Tensor::scalar(0.0)).item(), 0.0);
}

TEST(Elementwise, DispatchMatchesNamedOps) {
  const Tensor a = random_tensor({2, 3}, 4);
  const Tensor b = random_tensor({3}, 5);
  Tape t;
  const Tensor via_kind = elementwise(t, ElementwiseKind::kMul, a, b);
  const Tensor named = mul(t, a, b);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(via_kind[i], named[i]);
  EXPECT_THROW(elementwise(t, ElementwiseKind::kAdd, a), std::invalid_argument);
  EXPECT_THROW(add(t, a, Tensor::zeros({2})), DimensionError);
}

TEST(Elementwise, RowBroadcast) {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from({2}, {10, 20});
  Tape t;
  const Tensor y = add(t, a, b);
  EXPECT_EQ(y[0], 11.0);
  EXPECT_EQ(y[3], 24.0);
}

TEST(Elementwise, GradientsMatchFiniteDifferences) {
  Tensor a = random_tensor({3, 4}, 6, 1.0, true);
  Tensor b = random_tensor({3, 4}, 7, 1.0, true);
  Tensor row = random_tensor({4}, 8, 1.0, true);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, add(t, a, b)); }, a), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, mul(t, a, b)); }, b), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, mul(t, a, row)); }, row), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, add(t, a, row)); }, row), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, scale(t, a, -1.7)); }, a), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, silu(t, a)); }, a), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, gelu(t, a)); }, a), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, layer_norm(t, a)); }, a), 1e-6);
}

TEST(LayerNorm, RowsAreStandardized) {
  const Tensor x = random_tensor({5, 16}, 9, 3.0);
  Tape t;
  const Tensor y = layer_norm(t, x);
  for (std::size_t r = 0; r < 5; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 16; ++c) mean += y.at(r, c);
    mean /= 16;
    for (std::size_t c = 0; c < 16; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
    var /= 16;
    EXPECT_NEAR(mean, 0.0, 1e-9);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(RmsNorm, GradientsMatchFiniteDifferences) {
  Tensor x = random_tensor({3, 6}, 10, 1.0, true);
  Tensor gain = random_tensor({6}, 11, 1.0, true);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, rms_norm(t, x, gain)); }, x), 1e-6);
  EXPECT_LT(grad_check([&](Tape& t) { return probe_loss(t, rms_norm(t, x, gain)); }, gain), 1e-6);
}

TEST(SoftmaxXent, UniformLogits) {
  Tape t;
  const std::vector<int> tgt{2};
  EXPECT_NEAR(softmax_xent(t, Tensor::zeros({1, 4}), tgt).item(), std::log(4.0), 1e-15);
}

TEST(SoftmaxXent, ConfidentLogits) {
  Tape t;
  const std::vector<int> tgt{0};
  // log(1 + e^-20) computed in closed form
  const double expected = std::log1p(std::exp(-20.0));
  const double got = softmax_xent(t, Tensor::from({1, 2}, {10, -10}), tgt).item();
  EXPECT_NEAR(got, 2.06e-9, 1e-11);
  EXPECT_NEAR(got, expected, 1e-22);
}

TEST(SoftmaxXent, GradientIsSoftmaxMinusOneHotOverN) {
  Tensor logits = random_tensor({3, 5}, 12, 1.0, true);
  const std::vector<int> tgt{4, 0, 2};
  Tape t;
  t.backward(softmax_xent(t, logits, tgt));
  for (std::size_t r = 0; r < 3; ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < 5; ++c) z += std::exp(logits.at(r, c));
    for (std::size_t c = 0; c < 5; ++c) {
      const double p = std::exp(logits.at(r, c)) / z;
      const double expect = (p - (static_cast<int>(c) == tgt[r] ? 1.0 : 0.0)) / 3.0;
      EXPECT_NEAR(logits.grad()[r * 5 + c], expect, 1e-15);
    }
  }
  EXPECT_LT(grad_check([&](Tape& tp) { return softmax_xent(tp, logits, tgt); }, logits), 1e-6);
}

TEST(SoftmaxXent, RejectsBadTargets) {
  Tape t;
  const std::vector<int> bad{5};
  EXPECT_THROW(softmax_xent(t, Tensor::zeros({1, 5}), bad), std::out_of_range);
  const std::vector<int> too_few{};
  EXPECT_THROW(softmax_xent(t, Tensor::zeros({1, 5}), too_few), DimensionError);
}

TEST(Embedding, GathersRowsAndScattersGrad) {
  Tensor table = random_tensor({5, 3}, 13, 1.0, true);
  const std::vector<int> ids{4, 1, 4};
  Tape t;
  const Tensor y = embedding(t, table, ids);
  EXPECT_EQ(y.at(0, 2), table.at(4, 2));
  EXPECT_EQ(y.at(1, 0), table.at(1, 0));
  EXPECT_LT(grad_check([&](Tape& tp) { return probe_loss(tp, embedding(tp, table, ids)); }, table), 1e-6);
  const std::vector<int> bad{5};
  EXPECT_THROW(embedding(t, table, bad), std::out_of_range);
}

TEST(Dropout, IdentityAtZeroAndInvertedScaling) {
  const Tensor x = Tensor::full({200, 50}, 1.0);
  Rng rng(14);
  Tape t;
  const Tensor same = dropout(t, x, 0.0, rng);
  EXPECT_TRUE(same.same_storage(x));
  const Tensor y = dropout(t, x, 0.25, rng);
  double total = 0.0;
  std::size_t zeros = 0;
  for (double v : y.data()) {
    total += v;
    if (v == 0.0) {
      ++zeros;
    } else {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
    }
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 10000.0, 0.25, 0.02);
  EXPECT_NEAR(total / 10000.0, 1.0, 0.03);
}

TEST(Attention, GradientsMatchFiniteDifferences) {
  Tensor q = random_tensor({6, 4}, 15, 1.0, true);
  Tensor k = random_tensor({6, 4}, 16, 1.0, true);
  Tensor v = random_tensor({6, 4}, 17, 1.0, true);
  const auto f = [&](Tape& t) { return probe_loss(t, causal_attention(t, q, k, v, 2, 3)); };
  EXPECT_LT(grad_check(f, q), 1e-6);
  EXPECT_LT(grad_check(f, k), 1e-6);
  EXPECT_LT(grad_check(f, v), 1e-6);
}

TEST(Attention, IsCausal) {
  const Tensor q = random_tensor({4, 4}, 18);
  const Tensor k = random_tensor({4, 4}, 19);
  const Tensor v = random_tensor({4, 4}, 20);
  Tape t;
  const Tensor y0 = causal_attention(t, q, k, v, 2, 4);
  Tensor k2 = k.clone(), v2 = v.clone();
  for (std::size_t c = 0; c < 4; ++c) {
    k2.at(3, c) += 5.0;
    v2.at(3, c) -= 3.0;
  }
  const Tensor y1 = causal_attention(t, q, k2, v2, 2, 4);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(y0.at(r, c), y1.at(r, c));
  }
  // First position attends only to itself.
  for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(y0.at(0, c), v.at(0, c));
}

}  // namespace
}  // namespace l1ra
