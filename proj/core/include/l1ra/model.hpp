// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "l1ra/adame.hpp"
#include "l1ra/adapter.hpp"
#include "l1ra/rng.hpp"
#include "l1ra/tensor.hpp"

namespace l1ra {

struct ToyTransformerConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 64;
  int d_ff = 0;  // 0 selects 4 * d_model
  int vocab_size = 256;
  int max_seq_len = 64;
  bool tie_embeddings = false;
  /// The untied output head is drawn from N(0, (head_init_scale / sqrt(d_model))^2).
  /// Zero gives uniform next-token predictions.
  double head_init_scale = 2.0;

  int ffn_dim() const { return d_ff > 0 ? d_ff : 4 * d_model; }
  void validate() const;
};

/// Frozen weights of one LLaMA-style decoder layer.
struct LayerWeights {
  Tensor attn_norm;
  Tensor wq, wk, wv, wo;
  Tensor ffn_norm;
  Tensor w_up, w_gate, w_down;

  const Tensor& site(SiteKind kind) const;
};

enum class AdapterMode { kL1ra, kLora };

std::string_view adapter_mode_name(AdapterMode mode);
AdapterMode parse_adapter_mode(std::string_view name);

/// Base weights (never trained) plus the adapters attached to them.
struct ToyTransformer {
  ToyTransformerConfig config;
  Tensor tok_emb;   // [vocab x d]
  Tensor pos_emb;   // [max_seq_len x d]
  Tensor final_norm;
  Tensor lm_head;   // [d x vocab]; undefined when tied
  std::vector<LayerWeights> layers;
  /// Layer-major, kinds in kSiteKinds order; empty until attach_adapters.
  std::vector<L1raAdapter> adapters;

  L1raAdapter& adapter(int layer, SiteKind kind);
  const L1raAdapter& adapter(int layer, SiteKind kind) const;
  /// Base tensors in a fixed order (for hashing and counting).
  std::vector<Tensor> base_tensors() const;
};

/// Closed-form count of base (frozen) parameters.
std::size_t base_parameter_count(const ToyTransformerConfig& cfg);

ToyTransformer build_model(const ToyTransformerConfig& cfg, std::uint64_t seed);

/// One adapter per site per layer. The adapter's d_in/d_out come from the
/// site; cfg supplies r_init, alpha, dropout and sigma. Throws
/// std::logic_error if adapters are already attached.
void attach_adapters(ToyTransformer& model, const AdapterConfig& cfg, std::uint64_t seed);

/// Trainable adapter tensors. Gates are listed as ParamKind::kGate unless
/// include_gates is false (LoRA mode or frozen gates).
std::vector<ParamRef> adapter_params(ToyTransformer& model, bool include_gates);

/// FNV-1a over the bit patterns of all base tensors.
std::uint64_t base_weights_hash(const ToyTransformer& model);

struct TokenBatch {
  int batch_size = 0;
  int seq_len = 0;               // positions per sequence
  std::vector<int> inputs;       // batch_size * seq_len
  std::vector<int> targets;      // batch_size * seq_len
};

/// Builds next-token pairs from windows: inputs w[0..n-2], targets w[1..n-1].
TokenBatch make_batch(std::span<const std::vector<int>> windows);

struct ForwardOptions {
  AdapterMode mode = AdapterMode::kL1ra;
  bool train = false;
  Rng* dropout_rng = nullptr;
};

/// Logits [batch*seq_len x vocab].
Tensor forward_logits(Tape& tape, const ToyTransformer& model, std::span<const int> tokens, int batch_size,
                      int seq_len, const ForwardOptions& options = {});

struct LossOutput {
  Tensor data_loss;          // mean next-token NLL, differentiable
  double l1_penalty = 0.0;   // l1 * sum of gate L1 norms, diagnostic only
};

LossOutput forward_loss(Tape& tape, const ToyTransformer& model, const TokenBatch& batch, double l1,
                        const ForwardOptions& options = {});

void to_json(nlohmann::json& j, const ToyTransformerConfig& cfg);
void from_json(const nlohmann::json& j, ToyTransformerConfig& cfg);

}  // namespace l1ra
