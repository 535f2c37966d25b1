// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace l1ra::gelato {

// Analytic peak-memory estimate for adapter fine-tuning of a LLaMA-style
// decoder, split into five contributions:
//
//   params        base weights at (base_dtype_bytes + quant_block_overhead) per
//                 weight, plus adapters (A, c, B at every site) at adapter_dtype_bytes
//   steady state  one gradient (adapter_dtype_bytes) and two Adam moments
//                 (optim_dtype_bytes each) per trainable value
//   activation    with checkpointing: one [batch x seq x d_model] input per layer
//                 plus one layer's full saved set while it is recomputed;
//                 without: every layer's full saved set
//   loss          [batch x seq x vocab] logits at activation precision plus a
//                 4-byte softmax copy
//   other         safety_margin * (sum of the four above)
//
// A layer's saved set, in values per token: 6*d_model (block input, attention
// norm, q, attention output, residual, FFN norm) + 2*d_kv (k, v) + 4*d_ff (up,
// gate, silu(gate), product) + 14*rank (x.A and the gated product at each of
// the seven sites), plus n_heads*seq attention probabilities.

struct ModelSpec {
  int n_layers = 32;
  int d_model = 4096;
  int d_ff = 14336;
  int n_heads = 32;
  int n_kv_heads = 8;
  int vocab_size = 128256;
  double base_dtype_bytes = 0.5;
  double quant_block_overhead = 0.0625;
  double adapter_dtype_bytes = 4.0;
  double optim_dtype_bytes = 4.0;
  double activation_dtype_bytes = 2.0;

  int kv_dim() const { return d_model / n_heads * n_kv_heads; }
  void validate() const;
};

struct TrainSpec {
  int batch_size = 4;
  int seq_len = 1024;
  int adapter_rank_per_site = 16;
  bool gradient_checkpointing = true;
  double safety_margin = 0.05;

  void validate() const;
};

struct MemoryEstimate {
  double params_bytes = 0.0;
  double steady_state_bytes = 0.0;
  double activation_bytes = 0.0;
  double loss_bytes = 0.0;
  double other_bytes = 0.0;
  double total_peak_bytes = 0.0;
};

inline constexpr double kSoftmaxCopyBytes = 4.0;

double base_weight_count(const ModelSpec& m);
/// A, c and B values over every site of every layer at the given per-site rank.
double adapter_param_count(const ModelSpec& m, int rank);

MemoryEstimate estimate_breakdown(const ModelSpec& m, const TrainSpec& t);
double estimate_peak(const ModelSpec& m, const TrainSpec& t);

/// Largest per-site rank whose peak estimate fits in memory_limit_bytes.
/// Returns 0 when only the adapter-free footprint fits. Throws
/// InfeasibleBudget when even rank 0 exceeds the limit.
int plan_rank_budget(const ModelSpec& m, const TrainSpec& t, double memory_limit_bytes);

class InfeasibleBudget : public std::runtime_error {
 public:
  InfeasibleBudget(const std::string& what, double rank0_bytes) : std::runtime_error(what), rank0_bytes_(rank0_bytes) {}
  double rank0_bytes() const { return rank0_bytes_; }

 private:
  double rank0_bytes_;
};

/// Parses "1024", "512MB", "24GiB", "1.5 GB"; units are powers of 1024.
double parse_byte_quantity(const std::string& text);

void to_json(nlohmann::json& j, const ModelSpec& m);
void from_json(const nlohmann::json& j, ModelSpec& m);
void to_json(nlohmann::json& j, const TrainSpec& t);
void from_json(const nlohmann::json& j, TrainSpec& t);
void to_json(nlohmann::json& j, const MemoryEstimate& e);

/// Aligned table in the order params, steady state, activation, loss, other, total.
void print_breakdown(std::ostream& out, const MemoryEstimate& e);

}  // namespace l1ra::gelato
