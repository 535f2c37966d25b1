// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "l1ra/errors.hpp"

namespace l1ra {
namespace {

bool needs_grad(const Tensor& t) { return t.requires_grad(); }

void require_matrix(const Tensor& t, const char* what) {
  if (!t.defined()) throw DimensionError(std::string(what) + ": undefined tensor");
}

// Raw pointer to an output's upstream gradient, or nullptr when none flowed.
const double* upstream(const Tensor& out) { return out.has_grad() ? out.grad().data() : nullptr; }

enum class Broadcast { kSame, kRow };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  const bool b_is_row = (b.dim() == 1 || b.rows() == 1) && b.numel() == a.cols();
  if (b_is_row) return Broadcast::kRow;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(b.shape()) + " onto " +
                       shape_str(a.shape()));
}

Tensor make_output(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor::from(std::move(shape), std::move(values), requires_grad);
}

template <typename Forward, typename Derivative>
Tensor unary_pointwise(Tape& tape, const Tensor& a, Forward f, Derivative df) {
  std::vector<double> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  Tensor y = make_output(a.shape(), std::move(out), needs_grad(a));
  if (y.requires_grad()) {
    tape.record([a, y, df]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      auto ga = a.grad();
      const auto x = a.data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * df(x[i]);
    });
  }
  return y;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kGeluC = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || a.dim() != 2 || b.dim() != 2) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  Tensor y = make_output({m, n}, std::move(out), needs_grad(a) || needs_grad(b));
  if (y.requires_grad()) {
    tape.record([a, b, y, m, k, n]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      const double* pa = a.data().data();
      const double* pb = b.data().data();
      if (a.requires_grad()) {
        // dA = G . B^T
        double* ga = a.grad().data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = pb + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        // dB = A^T . G
        double* gb = b.grad().data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = g + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double s = pa[i * k + p];
            double* gbrow = gb + p * n;
            for (std::size_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
          }
        }
      }
    });
  }
  return y;
}

Tensor elementwise(Tape& tape, ElementwiseKind kind, const Tensor& a, const std::optional<Tensor>& b) {
  const bool binary = kind == ElementwiseKind::kAdd || kind == ElementwiseKind::kMul;
  if (binary && !b) throw std::invalid_argument("elementwise: binary kind needs a second operand");
  if (!binary && b) throw std::invalid_argument("elementwise: unary kind given a second operand");
  switch (kind) {
    case ElementwiseKind::kAdd: return add(tape, a, *b);
    case ElementwiseKind::kMul: return mul(tape, a, *b);
    case ElementwiseKind::kSilu: return silu(tape, a);
    case ElementwiseKind::kGelu: return gelu(tape, a);
    case ElementwiseKind::kLayerNorm: return layer_norm(tape, a);
  }
  throw std::invalid_argument("elementwise: unsupported kind " + std::to_string(static_cast<int>(kind)));
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a, b, "add");
  const std::size_t n = a.cols();
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += mode == Broadcast::kSame ? pb[i] : pb[i % n];
  Tensor y = make_output(a.shape(), std::move(out), needs_grad(a) || needs_grad(b));
  if (y.requires_grad()) {
    tape.record([a, b, y, mode, n]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        const std::size_t total = a.numel();
        for (std::size_t i = 0; i < total; ++i) gb[mode == Broadcast::kSame ? i : i % n] += g[i];
      }
    });
  }
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a, b, "mul");
  const std::size_t n = a.cols();
  const auto pa = a.data();
  const auto pb = b.data();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * (mode == Broadcast::kSame ? pb[i] : pb[i % n]);
  Tensor y = make_output(a.shape(), std::move(out), needs_grad(a) || needs_grad(b));
  if (y.requires_grad()) {
    tape.record([a, b, y, mode, n]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      const auto pa = a.data();
      const auto pb = b.data();
      const std::size_t total = a.numel();
      if (a.requires_grad()) {
        auto ga = a.grad();
        for (std::size_t i = 0; i < total; ++i) ga[i] += g[i] * (mode == Broadcast::kSame ? pb[i] : pb[i % n]);
      }
      if (b.requires_grad()) {
        auto gb = b.grad();
        for (std::size_t i = 0; i < total; ++i) gb[mode == Broadcast::kSame ? i : i % n] += g[i] * pa[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary_pointwise(
      tape, a, [factor](double x) { return x * factor; }, [factor](double) { return factor; });
}

Tensor silu(Tape& tape, const Tensor& a) {
  return unary_pointwise(
      tape, a, [](double x) { return x * sigmoid(x); },
      [](double x) {
        const double s = sigmoid(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor gelu(Tape& tape, const Tensor& a) {
  return unary_pointwise(
      tape, a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x))); },
      [](double x) {
        const double t = std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x));
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kSqrt2OverPi * (1.0 + 3.0 * kGeluC * x * x);
      });
}

Tensor layer_norm(Tape& tape, const Tensor& a, double eps) {
  const std::size_t rows = a.rows(), n = a.cols();
  const auto x = a.data();
  std::vector<double> out(a.numel());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = (xr[j] - mean) * inv_std[r];
  }
  Tensor y = make_output(a.shape(), std::move(out), needs_grad(a));
  if (y.requires_grad()) {
    tape.record([a, y, inv_std = std::move(inv_std), rows, n]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      const auto yh = y.data();
      auto ga = a.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        double g_mean = 0.0, gy_mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          g_mean += g[r * n + j];
          gy_mean += g[r * n + j] * yh[r * n + j];
        }
        g_mean /= static_cast<double>(n);
        gy_mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
          ga[r * n + j] += inv_std[r] * (g[r * n + j] - g_mean - yh[r * n + j] * gy_mean);
        }
      }
    });
  }
  return y;
}

Tensor rms_norm(Tape& tape, const Tensor& x, const Tensor& gain, double eps) {
  const std::size_t rows = x.rows(), n = x.cols();
  if (gain.numel() != n) {
    throw DimensionError("rms_norm: gain " + shape_str(gain.shape()) + " does not match " + shape_str(x.shape()));
  }
  const auto px = x.data();
  const auto pg = gain.data();
  std::vector<double> out(x.numel());
  std::vector<double> inv(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ms = 0.0;
    for (std::size_t j = 0; j < n; ++j) ms += px[r * n + j] * px[r * n + j];
    inv[r] = 1.0 / std::sqrt(ms / static_cast<double>(n) + eps);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = px[r * n + j] * inv[r] * pg[j];
  }
  Tensor y = make_output(x.shape(), std::move(out), needs_grad(x) || needs_grad(gain));
  if (y.requires_grad()) {
    tape.record([x, gain, y, inv = std::move(inv), rows, n]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      const auto px = x.data();
      const auto pg = gain.data();
      if (x.requires_grad()) {
        auto gx = x.grad();
        for (std::size_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * pg[j] * px[r * n + j];
          const double coeff = inv[r] * inv[r] * inv[r] * dot / static_cast<double>(n);
          for (std::size_t j = 0; j < n; ++j) {
            gx[r * n + j] += inv[r] * g[r * n + j] * pg[j] - px[r * n + j] * coeff;
          }
        }
      }
      if (gain.requires_grad()) {
        auto gg = gain.grad();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < n; ++j) gg[j] += g[r * n + j] * px[r * n + j] * inv[r];
        }
      }
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor y = make_output({1}, {total}, needs_grad(a));
  if (y.requires_grad()) {
    tape.record([a, y]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      for (double& v : a.grad()) v += g[0];
    });
  }
  return y;
}

Tensor embedding(Tape& tape, const Tensor& table, std::span<const int> ids) {
  const std::size_t vocab = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * d);
  const auto pt = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                              std::to_string(vocab));
    }
    std::copy_n(pt.begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  Tensor y = make_output({ids.size(), d}, std::move(out), needs_grad(table));
  if (y.requires_grad()) {
    tape.record([table, y, rows = std::vector<int>(ids.begin(), ids.end()), d]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      auto gt = table.grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) gt[static_cast<std::size_t>(rows[i]) * d + j] += g[i * d + j];
      }
    });
  }
  return y;
}

Tensor dropout(Tape& tape, const Tensor& a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1), got " + std::to_string(p));
  if (p == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(a.numel());
  for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor m = Tensor::from(a.shape(), std::move(mask));
  return mul(tape, a, m);
}

Tensor softmax_xent(Tape& tape, const Tensor& logits, std::span<const int> targets) {
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("softmax_xent: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_str(logits.shape()));
  }
  const auto z = logits.data();
  std::vector<double> probs(logits.numel());
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw std::out_of_range("softmax_xent: target " + std::to_string(t) + " out of range for " +
                              std::to_string(v) + " classes");
    }
    const double* zr = z.data() + r * v;
    const std::size_t arg = static_cast<std::size_t>(std::max_element(zr, zr + v) - zr);
    const double m = zr[arg];
    double rest = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      const double e = std::exp(zr[j] - m);
      probs[r * v + j] = e;
      if (j != arg) rest += e;
    }
    const double denom = 1.0 + rest;
    for (std::size_t j = 0; j < v; ++j) probs[r * v + j] /= denom;
    total += (m - zr[t]) + std::log1p(rest);
  }
  Tensor y = make_output({1}, {total / static_cast<double>(n)}, needs_grad(logits));
  if (y.requires_grad()) {
    tape.record([logits, y, probs = std::move(probs), tgt = std::vector<int>(targets.begin(), targets.end()), n,
                 v]() mutable {
      const double* g = upstream(y);
      if (!g) return;
      auto gl = logits.grad();
      const double s = g[0] / static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < v; ++j) gl[r * v + j] += s * probs[r * v + j];
        gl[r * v + static_cast<std::size_t>(tgt[r])] -= s;
      }
    });
  }
  return y;
}

}  // namespace l1ra
