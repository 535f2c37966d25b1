// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>

#include "l1ra/rng.hpp"
#include "l1ra/tensor.hpp"

namespace l1ra {

// Differentiable primitives. Each records its backward rule on the tape when
// any input requires a gradient; the output then requires a gradient too.

/// [m x k] . [k x n] -> [m x n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

enum class ElementwiseKind {
  kAdd,        // binary
  kMul,        // binary
  kSilu,       // unary
  kGelu,       // unary, tanh approximation
  kLayerNorm,  // unary, per-row standardization without affine terms
};

/// Dispatches on kind. Binary kinds take b with the same shape as a, or a row
/// of length cols(a) that is broadcast down the rows.
Tensor elementwise(Tape& tape, ElementwiseKind kind, const Tensor& a,
                   const std::optional<Tensor>& b = std::nullopt);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);
Tensor silu(Tape& tape, const Tensor& a);
Tensor gelu(Tape& tape, const Tensor& a);
Tensor layer_norm(Tape& tape, const Tensor& a, double eps = 1e-12);
/// x / rms(x) * gain, per row; gain is a row of length cols(x).
Tensor rms_norm(Tape& tape, const Tensor& x, const Tensor& gain, double eps = 1e-6);
Tensor sum(Tape& tape, const Tensor& a);

/// Rows of table selected by ids.
Tensor embedding(Tape& tape, const Tensor& table, std::span<const int> ids);

/// Inverted dropout; identity when p == 0.
Tensor dropout(Tape& tape, const Tensor& a, double p, Rng& rng);

/// Multi-head causal self-attention over `batch` sequences of `seq_len` rows
/// each. q, k, v are [batch*seq_len x d] with heads laid out as contiguous
/// column blocks of width d / n_heads.
Tensor causal_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t n_heads, std::size_t seq_len);

/// Mean negative log-likelihood of targets under row-wise softmax(logits).
Tensor softmax_xent(Tape& tape, const Tensor& logits, std::span<const int> targets);

}  // namespace l1ra
