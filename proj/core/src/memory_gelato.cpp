// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/memory_gelato.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "l1ra/errors.hpp"

namespace l1ra::gelato {
namespace {

constexpr int kSites = 7;
constexpr int kMaxPlannedRank = 1 << 24;

double per_token_layer_values(const ModelSpec& m, int rank) {
  return 6.0 * m.d_model + 2.0 * m.kv_dim() + 4.0 * m.d_ff + 2.0 * kSites * rank;
}

}  // namespace

void ModelSpec::validate() const {
  if (n_layers < 1 || d_model < 1 || d_ff < 1 || n_heads < 1 || n_kv_heads < 1 || vocab_size < 1) {
    throw ConfigError("model spec: all dimensions must be >= 1");
  }
  if (n_heads % n_kv_heads != 0) throw ConfigError("model spec: n_kv_heads must divide n_heads");
  if (d_model % n_heads != 0) throw ConfigError("model spec: n_heads must divide d_model");
  if (!(base_dtype_bytes > 0.0) || !(adapter_dtype_bytes > 0.0) || !(optim_dtype_bytes > 0.0) ||
      !(activation_dtype_bytes > 0.0) || !(quant_block_overhead >= 0.0)) {
    throw ConfigError("model spec: byte sizes must be positive");
  }
}

void TrainSpec::validate() const {
  if (batch_size < 1 || seq_len < 1) throw ConfigError("train spec: batch_size and seq_len must be >= 1");
  if (adapter_rank_per_site < 0) throw ConfigError("train spec: adapter_rank_per_site must be >= 0");
  if (!(safety_margin >= 0.0)) throw ConfigError("train spec: safety_margin must be >= 0");
}

double base_weight_count(const ModelSpec& m) {
  const double d = m.d_model, kv = m.kv_dim(), f = m.d_ff, v = m.vocab_size;
  const double per_layer = 2.0 * d * d + 2.0 * d * kv + 3.0 * d * f + 2.0 * d;
  return m.n_layers * per_layer + 2.0 * v * d + d;
}

double adapter_param_count(const ModelSpec& m, int rank) {
  const double d = m.d_model, kv = m.kv_dim(), f = m.d_ff;
  // sum of (d_in + d_out) over q, k, v, o, up, gate, down, plus one gate per site
  const double per_rank = 9.0 * d + 2.0 * kv + 3.0 * f + kSites;
  return static_cast<double>(m.n_layers) * rank * per_rank;
}

MemoryEstimate estimate_breakdown(const ModelSpec& m, const TrainSpec& t) {
  m.validate();
  t.validate();
  const double tokens = static_cast<double>(t.batch_size) * t.seq_len;
  const double trainable = adapter_param_count(m, t.adapter_rank_per_site);

  MemoryEstimate e;
  e.params_bytes = base_weight_count(m) * (m.base_dtype_bytes + m.quant_block_overhead) +
                   trainable * m.adapter_dtype_bytes;
  e.steady_state_bytes = trainable * (m.adapter_dtype_bytes + 2.0 * m.optim_dtype_bytes);

  const double layer_set = tokens * per_token_layer_values(m, t.adapter_rank_per_site) +
                           static_cast<double>(t.batch_size) * m.n_heads * t.seq_len * t.seq_len;
  const double activation_values = t.gradient_checkpointing
                                       ? m.n_layers * tokens * m.d_model + layer_set
                                       : m.n_layers * layer_set;
  e.activation_bytes = activation_values * m.activation_dtype_bytes;

  const double logits = tokens * m.vocab_size;
  e.loss_bytes = logits * m.activation_dtype_bytes + logits * kSoftmaxCopyBytes;

  const double subtotal = e.params_bytes + e.steady_state_bytes + e.activation_bytes + e.loss_bytes;
  e.other_bytes = t.safety_margin * subtotal;
  e.total_peak_bytes = subtotal + e.other_bytes;
  return e;
}

double estimate_peak(const ModelSpec& m, const TrainSpec& t) { return estimate_breakdown(m, t).total_peak_bytes; }

int plan_rank_budget(const ModelSpec& m, const TrainSpec& t, double memory_limit_bytes) {
  TrainSpec probe = t;
  const auto peak_at = [&](int rank) {
    probe.adapter_rank_per_site = rank;
    return estimate_peak(m, probe);
  };
  const double rank0 = peak_at(0);
  if (memory_limit_bytes < rank0) {
    throw InfeasibleBudget(fmt::format("memory limit {} B is below the rank-0 footprint {} B", memory_limit_bytes, rank0),
                           rank0);
  }
  int lo = 0;  // feasible
  int hi = 1;
  while (hi < kMaxPlannedRank && peak_at(hi) <= memory_limit_bytes) {
    lo = hi;
    hi *= 2;
  }
  if (hi >= kMaxPlannedRank && peak_at(kMaxPlannedRank) <= memory_limit_bytes) return kMaxPlannedRank;
  // invariant: peak(lo) <= limit < peak(hi)
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (peak_at(mid) <= memory_limit_bytes) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double parse_byte_quantity(const std::string& text) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse byte quantity '" + text + "'");
  }
  std::string unit;
  for (; pos < text.size(); ++pos) {
    if (!std::isspace(static_cast<unsigned char>(text[pos]))) unit.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(text[pos]))));
  }
  double mult = 0.0;
  if (unit.empty() || unit == "B") mult = 1.0;
  else if (unit == "K" || unit == "KB" || unit == "KIB") mult = 1024.0;
  else if (unit == "M" || unit == "MB" || unit == "MIB") mult = 1024.0 * 1024.0;
  else if (unit == "G" || unit == "GB" || unit == "GIB") mult = 1024.0 * 1024.0 * 1024.0;
  else if (unit == "T" || unit == "TB" || unit == "TIB") mult = 1024.0 * 1024.0 * 1024.0 * 1024.0;
  else throw std::invalid_argument("unknown byte unit '" + unit + "' in '" + text + "'");
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("byte quantity must be non-negative: " + text);
  return value * mult;
}

void to_json(nlohmann::json& j, const ModelSpec& m) {
  j = nlohmann::json{{"n_layers", m.n_layers},
                     {"d_model", m.d_model},
                     {"d_ff", m.d_ff},
                     {"n_heads", m.n_heads},
                     {"n_kv_heads", m.n_kv_heads},
                     {"vocab_size", m.vocab_size},
                     {"base_dtype_bytes", m.base_dtype_bytes},
                     {"quant_block_overhead", m.quant_block_overhead},
                     {"adapter_dtype_bytes", m.adapter_dtype_bytes},
                     {"optim_dtype_bytes", m.optim_dtype_bytes},
                     {"activation_dtype_bytes", m.activation_dtype_bytes}};
}

void from_json(const nlohmann::json& j, ModelSpec& m) {
  m.n_layers = j.at("n_layers").get<int>();
  m.d_model = j.at("d_model").get<int>();
  m.d_ff = j.at("d_ff").get<int>();
  m.n_heads = j.at("n_heads").get<int>();
  m.n_kv_heads = j.value("n_kv_heads", m.n_heads);
  m.vocab_size = j.at("vocab_size").get<int>();
  m.base_dtype_bytes = j.at("base_dtype_bytes").get<double>();
  m.quant_block_overhead = j.value("quant_block_overhead", 0.0);
  m.adapter_dtype_bytes = j.at("adapter_dtype_bytes").get<double>();
  m.optim_dtype_bytes = j.at("optim_dtype_bytes").get<double>();
  m.activation_dtype_bytes = j.at("activation_dtype_bytes").get<double>();
  m.validate();
}

void to_json(nlohmann::json& j, const TrainSpec& t) {
  j = nlohmann::json{{"batch_size", t.batch_size},
                     {"seq_len", t.seq_len},
                     {"adapter_rank_per_site", t.adapter_rank_per_site},
                     {"gradient_checkpointing", t.gradient_checkpointing},
                     {"safety_margin", t.safety_margin}};
}

void from_json(const nlohmann::json& j, TrainSpec& t) {
  const TrainSpec d;
  t.batch_size = j.at("batch_size").get<int>();
  t.seq_len = j.at("seq_len").get<int>();
  t.adapter_rank_per_site = j.value("adapter_rank_per_site", 0);
  t.gradient_checkpointing = j.value("gradient_checkpointing", d.gradient_checkpointing);
  t.safety_margin = j.value("safety_margin", d.safety_margin);
  t.validate();
}

void to_json(nlohmann::json& j, const MemoryEstimate& e) {
  j = nlohmann::json{{"params_bytes", e.params_bytes},         {"steady_state_bytes", e.steady_state_bytes},
                     {"activation_bytes", e.activation_bytes}, {"loss_bytes", e.loss_bytes},
                     {"other_bytes", e.other_bytes},           {"total_peak_bytes", e.total_peak_bytes}};
}

void print_breakdown(std::ostream& out, const MemoryEstimate& e) {
  const auto row = [&](const char* label, double bytes) {
    out << fmt::format("{:<24}{:>20.0f} B{:>14.2f} MiB\n", label, bytes, bytes / (1024.0 * 1024.0));
  };
  row("Model parameters", e.params_bytes);
  row("Steady state memory", e.steady_state_bytes);
  row("Activation", e.activation_bytes);
  row("Loss", e.loss_bytes);
  row("Other contributions", e.other_bytes);
  out << std::string(60, '-') << '\n';
  row("Total peak", e.total_peak_bytes);
}

}  // namespace l1ra::gelato
