// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "memory_oracle.hpp"

#include <utility>

namespace l1ra::oracle {
namespace {

struct Site {
  const char* name;
  double d_in;
  double d_out;
};

std::vector<Site> sites(const gelato::ModelSpec& m) {
  const double d = m.d_model;
  const double kv = static_cast<double>(m.d_model / m.n_heads * m.n_kv_heads);
  const double f = m.d_ff;
  return {{"q", d, d}, {"k", d, kv}, {"v", d, kv}, {"o", d, d}, {"up", d, f}, {"gate", d, f}, {"down", f, d}};
}

void push_layer_saved_set(std::vector<Allocation>& out, const gelato::ModelSpec& m, const gelato::TrainSpec& t,
                          const std::string& prefix) {
  const double tok = static_cast<double>(t.batch_size) * t.seq_len;
  const double act = m.activation_dtype_bytes;
  const double d = m.d_model;
  const double kv = static_cast<double>(m.d_model / m.n_heads * m.n_kv_heads);
  const double f = m.d_ff;
  const auto add = [&](const std::string& n, double elems) {
    out.push_back({prefix + n, MemCategory::kActivation, elems, act});
  };
  add("block_input", tok * d);
  add("attn_norm", tok * d);
  add("q", tok * d);
  add("k", tok * kv);
  add("v", tok * kv);
  add("attn_probs", static_cast<double>(t.batch_size) * m.n_heads * t.seq_len * t.seq_len);
  add("attn_out", tok * d);
  add("residual", tok * d);
  add("ffn_norm", tok * d);
  add("up", tok * f);
  add("gate", tok * f);
  add("silu_gate", tok * f);
  add("ffn_product", tok * f);
  for (const Site& s : sites(m)) {
    add(std::string("xA_") + s.name, tok * t.adapter_rank_per_site);
    add(std::string("xAc_") + s.name, tok * t.adapter_rank_per_site);
  }
}

}  // namespace

std::vector<Allocation> enumerate_allocations(const gelato::ModelSpec& m, const gelato::TrainSpec& t) {
  std::vector<Allocation> out;
  const double base_bytes = m.base_dtype_bytes + m.quant_block_overhead;
  const double d = m.d_model;
  const double v = m.vocab_size;
  const double r = t.adapter_rank_per_site;

  out.push_back({"tok_embedding", MemCategory::kParams, v * d, base_bytes});
  out.push_back({"lm_head", MemCategory::kParams, d * v, base_bytes});
  out.push_back({"final_norm", MemCategory::kParams, d, base_bytes});
  for (int l = 0; l < m.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    out.push_back({p + "attn_norm", MemCategory::kParams, d, base_bytes});
    out.push_back({p + "ffn_norm", MemCategory::kParams, d, base_bytes});
    for (const Site& s : sites(m)) {
      out.push_back({p + "W_" + s.name, MemCategory::kParams, s.d_in * s.d_out, base_bytes});
      const std::pair<std::string, double> trainables[] = {{"A", s.d_in * r}, {"c", r}, {"B", r * s.d_out}};
      for (const auto& [tn, elems] : trainables) {
        const std::string n = p + s.name + "." + tn;
        out.push_back({n, MemCategory::kParams, elems, m.adapter_dtype_bytes});
        out.push_back({n + ".grad", MemCategory::kSteadyState, elems, m.adapter_dtype_bytes});
        out.push_back({n + ".adam_m", MemCategory::kSteadyState, elems, m.optim_dtype_bytes});
        out.push_back({n + ".adam_v", MemCategory::kSteadyState, elems, m.optim_dtype_bytes});
      }
    }
  }

  const double tok = static_cast<double>(t.batch_size) * t.seq_len;
  if (t.gradient_checkpointing) {
    for (int l = 0; l < m.n_layers; ++l) {
      out.push_back({"ckpt" + std::to_string(l), MemCategory::kActivation, tok * d, m.activation_dtype_bytes});
    }
    push_layer_saved_set(out, m, t, "recompute.");
  } else {
    for (int l = 0; l < m.n_layers; ++l) push_layer_saved_set(out, m, t, "layer" + std::to_string(l) + ".");
  }

  out.push_back({"logits", MemCategory::kLoss, tok * v, m.activation_dtype_bytes});
  out.push_back({"softmax_fp32", MemCategory::kLoss, tok * v, 4.0});
  return out;
}

gelato::MemoryEstimate enumerated_breakdown(const gelato::ModelSpec& m, const gelato::TrainSpec& t) {
  gelato::MemoryEstimate e;
  for (const Allocation& a : enumerate_allocations(m, t)) {
    switch (a.category) {
      case MemCategory::kParams: e.params_bytes += a.bytes(); break;
      case MemCategory::kSteadyState: e.steady_state_bytes += a.bytes(); break;
      case MemCategory::kActivation: e.activation_bytes += a.bytes(); break;
      case MemCategory::kLoss: e.loss_bytes += a.bytes(); break;
    }
  }
  const double subtotal = e.params_bytes + e.steady_state_bytes + e.activation_bytes + e.loss_bytes;
  e.other_bytes = t.safety_margin * subtotal;
  e.total_peak_bytes = subtotal + e.other_bytes;
  return e;
}

}  // namespace l1ra::oracle
