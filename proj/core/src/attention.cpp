// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "l1ra/errors.hpp"
#include "l1ra/ops.hpp"

namespace l1ra {

Tensor causal_attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v, std::size_t n_heads,
                        std::size_t seq_len) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.dim() != 2) {
    throw DimensionError("causal_attention: q/k/v shapes differ: " + shape_str(q.shape()) + ", " +
                         shape_str(k.shape()) + ", " + shape_str(v.shape()));
  }
  const std::size_t rows = q.rows(), d = q.cols();
  if (n_heads == 0 || d % n_heads != 0) {
    throw DimensionError("causal_attention: width " + std::to_string(d) + " not divisible by " +
                         std::to_string(n_heads) + " heads");
  }
  if (seq_len == 0 || rows % seq_len != 0) {
    throw DimensionError("causal_attention: " + std::to_string(rows) + " rows is not a multiple of seq_len " +
                         std::to_string(seq_len));
  }
  const std::size_t batch = rows / seq_len, dh = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs[b][h][i][j] for j <= i, stored densely as S x S per (b, h).
  std::vector<double> probs(batch * n_heads * seq_len * seq_len, 0.0);
  std::vector<double> out(rows * d, 0.0);
  const double* pq = q.data().data();
  const double* pk = k.data().data();
  const double* pv = v.data().data();

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < n_heads; ++h) {
      double* P = probs.data() + (b * n_heads + h) * seq_len * seq_len;
      for (std::size_t i = 0; i < seq_len; ++i) {
        const double* qi = pq + (b * seq_len + i) * d + h * dh;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= i; ++j) {
          const double* kj = pk + (b * seq_len + j) * d + h * dh;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          s *= inv_sqrt;
          P[i * seq_len + j] = s;
          mx = std::max(mx, s);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          P[i * seq_len + j] = std::exp(P[i * seq_len + j] - mx);
          denom += P[i * seq_len + j];
        }
        double* oi = out.data() + (b * seq_len + i) * d + h * dh;
        for (std::size_t j = 0; j <= i; ++j) {
          P[i * seq_len + j] /= denom;
          const double p = P[i * seq_len + j];
          const double* vj = pv + (b * seq_len + j) * d + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
      }
    }
  }

  Tensor y = Tensor::from({rows, d}, std::move(out), q.requires_grad() || k.requires_grad() || v.requires_grad());
  if (y.requires_grad()) {
    tape.record([q, k, v, y, probs = std::move(probs), batch, n_heads, seq_len, d, dh, inv_sqrt]() mutable {
      if (!y.has_grad()) return;
      const double* g = std::as_const(y).grad().data();
      const double* pq = q.data().data();
      const double* pk = k.data().data();
      const double* pv = v.data().data();
      double* gq = q.requires_grad() ? q.grad().data() : nullptr;
      double* gk = k.requires_grad() ? k.grad().data() : nullptr;
      double* gv = v.requires_grad() ? v.grad().data() : nullptr;
      std::vector<double> dp(seq_len);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t h = 0; h < n_heads; ++h) {
          const double* P = probs.data() + (b * n_heads + h) * seq_len * seq_len;
          for (std::size_t i = 0; i < seq_len; ++i) {
            const std::size_t ri = (b * seq_len + i) * d + h * dh;
            const double* gi = g + ri;
            double weighted = 0.0;
            for (std::size_t j = 0; j <= i; ++j) {
              const std::size_t rj = (b * seq_len + j) * d + h * dh;
              double s = 0.0;
              for (std::size_t c = 0; c < dh; ++c) s += gi[c] * pv[rj + c];
              dp[j] = s;
              weighted += P[i * seq_len + j] * s;
              if (gv) {
                const double p = P[i * seq_len + j];
                for (std::size_t c = 0; c < dh; ++c) gv[rj + c] += p * gi[c];
              }
            }
            for (std::size_t j = 0; j <= i; ++j) {
              const std::size_t rj = (b * seq_len + j) * d + h * dh;
              const double ds = P[i * seq_len + j] * (dp[j] - weighted) * inv_sqrt;
              if (gq) {
                for (std::size_t c = 0; c < dh; ++c) gq[ri + c] += ds * pk[rj + c];
              }
              if (gk) {
                for (std::size_t c = 0; c < dh; ++c) gk[rj + c] += ds * pq[ri + c];
              }
            }
          }
        }
      }
    });
  }
  return y;
}

}  // namespace l1ra
