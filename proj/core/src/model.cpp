// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "l1ra/errors.hpp"
#include "l1ra/ops.hpp"

namespace l1ra {
namespace {

Tensor gaussian(Shape shape, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(values));
}

std::pair<int, int> site_dims(const ToyTransformerConfig& cfg, SiteKind kind) {
  const int d = cfg.d_model, f = cfg.ffn_dim();
  switch (kind) {
    case SiteKind::kUp:
    case SiteKind::kGate: return {d, f};
    case SiteKind::kDown: return {f, d};
    default: return {d, d};
  }
}

Tensor apply_site(Tape& tape, const ToyTransformer& model, int layer, SiteKind kind, const Tensor& x,
                  const ForwardOptions& opt) {
  const Tensor& w = model.layers[static_cast<std::size_t>(layer)].site(kind);
  if (model.adapters.empty()) return matmul(tape, x, w);
  const L1raAdapter& ad = model.adapter(layer, kind);
  if (opt.mode == AdapterMode::kLora) {
    return forward_lora(tape, ad.a(), ad.b(), x, w, ad.scale(), opt.train, ad.dropout_p(), opt.dropout_rng);
  }
  return forward_l1ra(tape, ad, x, w, opt.train, opt.dropout_rng);
}

}  // namespace

void ToyTransformerConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || vocab_size < 1 || max_seq_len < 1 || d_ff < 0) {
    throw ConfigError("model: all dimensions must be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw ConfigError("model: d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (!(head_init_scale >= 0.0)) throw ConfigError("model: head_init_scale must be non-negative");
}

const Tensor& LayerWeights::site(SiteKind kind) const {
  switch (kind) {
    case SiteKind::kQ: return wq;
    case SiteKind::kK: return wk;
    case SiteKind::kV: return wv;
    case SiteKind::kO: return wo;
    case SiteKind::kUp: return w_up;
    case SiteKind::kGate: return w_gate;
    case SiteKind::kDown: return w_down;
  }
  throw std::invalid_argument("unknown site kind");
}

std::string_view adapter_mode_name(AdapterMode mode) { return mode == AdapterMode::kL1ra ? "l1ra" : "lora"; }

AdapterMode parse_adapter_mode(std::string_view name) {
  if (name == "l1ra") return AdapterMode::kL1ra;
  if (name == "lora") return AdapterMode::kLora;
  throw ConfigError("unknown adapter mode '" + std::string(name) + "' (expected l1ra or lora)");
}

L1raAdapter& ToyTransformer::adapter(int layer, SiteKind kind) {
  return adapters.at(static_cast<std::size_t>(layer * kSitesPerLayer + static_cast<int>(kind)));
}

const L1raAdapter& ToyTransformer::adapter(int layer, SiteKind kind) const {
  return adapters.at(static_cast<std::size_t>(layer * kSitesPerLayer + static_cast<int>(kind)));
}

std::vector<Tensor> ToyTransformer::base_tensors() const {
  std::vector<Tensor> out{tok_emb, pos_emb};
  for (const auto& l : layers) {
    out.insert(out.end(), {l.attn_norm, l.wq, l.wk, l.wv, l.wo, l.ffn_norm, l.w_up, l.w_gate, l.w_down});
  }
  out.push_back(final_norm);
  if (!config.tie_embeddings) out.push_back(lm_head);
  return out;
}

std::size_t base_parameter_count(const ToyTransformerConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto f = static_cast<std::size_t>(cfg.ffn_dim());
  const auto v = static_cast<std::size_t>(cfg.vocab_size);
  const auto t = static_cast<std::size_t>(cfg.max_seq_len);
  const auto per_layer = 2 * d + 4 * d * d + 3 * d * f;
  return v * d + t * d + static_cast<std::size_t>(cfg.n_layers) * per_layer + d + (cfg.tie_embeddings ? 0 : d * v);
}

ToyTransformer build_model(const ToyTransformerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto f = static_cast<std::size_t>(cfg.ffn_dim());
  const auto v = static_cast<std::size_t>(cfg.vocab_size);
  std::uint64_t stream = 0;
  const auto next = [&] { return derive_seed(seed, stream++); };

  ToyTransformer m;
  m.config = cfg;
  m.tok_emb = gaussian({v, d}, 1.0, next());
  m.pos_emb = gaussian({static_cast<std::size_t>(cfg.max_seq_len), d}, 0.1, next());
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double sf = 1.0 / std::sqrt(static_cast<double>(f));
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerWeights w;
    w.attn_norm = Tensor::full({d}, 1.0);
    w.wq = gaussian({d, d}, sd, next());
    w.wk = gaussian({d, d}, sd, next());
    w.wv = gaussian({d, d}, sd, next());
    w.wo = gaussian({d, d}, sd, next());
    w.ffn_norm = Tensor::full({d}, 1.0);
    w.w_up = gaussian({d, f}, sd, next());
    w.w_gate = gaussian({d, f}, sd, next());
    w.w_down = gaussian({f, d}, sf, next());
    m.layers.push_back(std::move(w));
  }
  m.final_norm = Tensor::full({d}, 1.0);
  if (cfg.tie_embeddings) {
    std::vector<double> t(d * v);
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t j = 0; j < d; ++j) t[j * v + i] = m.tok_emb.at(i, j);
    }
    m.lm_head = Tensor::from({d, v}, std::move(t));
  } else {
    m.lm_head = gaussian({d, v}, cfg.head_init_scale * sd, next());
  }
  return m;
}

void attach_adapters(ToyTransformer& model, const AdapterConfig& cfg, std::uint64_t seed) {
  if (!model.adapters.empty()) throw std::logic_error("attach_adapters: adapters already attached");
  std::vector<L1raAdapter> adapters;
  adapters.reserve(static_cast<std::size_t>(model.config.n_layers * kSitesPerLayer));
  for (int l = 0; l < model.config.n_layers; ++l) {
    for (SiteKind kind : kSiteKinds) {
      const auto [d_in, d_out] = site_dims(model.config, kind);
      const SiteId site{l, kind};
      const auto stream = static_cast<std::uint64_t>(l * kSitesPerLayer + static_cast<int>(kind));
      adapters.push_back(init_adapter(cfg.for_site(d_in, d_out), derive_seed(seed, stream), site));
    }
  }
  model.adapters = std::move(adapters);
}

std::vector<ParamRef> adapter_params(ToyTransformer& model, bool include_gates) {
  std::vector<ParamRef> params;
  for (auto& ad : model.adapters) {
    params.push_back({ad.a(), ParamKind::kWeight});
    if (include_gates) params.push_back({ad.c(), ParamKind::kGate});
    params.push_back({ad.b(), ParamKind::kWeight});
  }
  return params;
}

std::uint64_t base_weights_hash(const ToyTransformer& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : model.base_tensors()) {
    for (double v : t.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

TokenBatch make_batch(std::span<const std::vector<int>> windows) {
  if (windows.empty()) throw std::invalid_argument("make_batch: no windows");
  const std::size_t n = windows.front().size();
  if (n < 2) throw std::invalid_argument("make_batch: windows need at least 2 tokens");
  TokenBatch batch;
  batch.batch_size = static_cast<int>(windows.size());
  batch.seq_len = static_cast<int>(n - 1);
  for (const auto& w : windows) {
    if (w.size() != n) throw std::invalid_argument("make_batch: windows differ in length");
    batch.inputs.insert(batch.inputs.end(), w.begin(), w.end() - 1);
    batch.targets.insert(batch.targets.end(), w.begin() + 1, w.end());
  }
  return batch;
}

Tensor forward_logits(Tape& tape, const ToyTransformer& model, std::span<const int> tokens, int batch_size,
                      int seq_len, const ForwardOptions& opt) {
  const auto& cfg = model.config;
  if (batch_size < 1 || seq_len < 1 || seq_len > cfg.max_seq_len ||
      tokens.size() != static_cast<std::size_t>(batch_size * seq_len)) {
    throw DimensionError("forward: " + std::to_string(tokens.size()) + " tokens for batch " +
                         std::to_string(batch_size) + " x seq " + std::to_string(seq_len) + " (max_seq_len " +
                         std::to_string(cfg.max_seq_len) + ")");
  }
  std::vector<int> positions(tokens.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i % static_cast<std::size_t>(seq_len));

  Tensor x = add(tape, embedding(tape, model.tok_emb, tokens), embedding(tape, model.pos_emb, positions));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerWeights& w = model.layers[static_cast<std::size_t>(l)];
    const Tensor h = rms_norm(tape, x, w.attn_norm);
    const Tensor q = apply_site(tape, model, l, SiteKind::kQ, h, opt);
    const Tensor k = apply_site(tape, model, l, SiteKind::kK, h, opt);
    const Tensor v = apply_site(tape, model, l, SiteKind::kV, h, opt);
    const Tensor attn = causal_attention(tape, q, k, v, static_cast<std::size_t>(cfg.n_heads),
                                         static_cast<std::size_t>(seq_len));
    x = add(tape, x, apply_site(tape, model, l, SiteKind::kO, attn, opt));

    const Tensor h2 = rms_norm(tape, x, w.ffn_norm);
    const Tensor up = apply_site(tape, model, l, SiteKind::kUp, h2, opt);
    const Tensor gate = apply_site(tape, model, l, SiteKind::kGate, h2, opt);
    const Tensor inner = mul(tape, silu(tape, gate), up);
    x = add(tape, x, apply_site(tape, model, l, SiteKind::kDown, inner, opt));
  }
  return matmul(tape, rms_norm(tape, x, model.final_norm), model.lm_head);
}

LossOutput forward_loss(Tape& tape, const ToyTransformer& model, const TokenBatch& batch, double l1,
                        const ForwardOptions& options) {
  const Tensor logits = forward_logits(tape, model, batch.inputs, batch.batch_size, batch.seq_len, options);
  LossOutput out;
  out.data_loss = softmax_xent(tape, logits, batch.targets);
  if (l1 != 0.0) {
    double total = 0.0;
    for (const auto& ad : model.adapters) total += ad.gate_l1();
    out.l1_penalty = l1 * total;
  }
  return out;
}

void to_json(nlohmann::json& j, const ToyTransformerConfig& cfg) {
  j = nlohmann::json{{"n_layers", cfg.n_layers},       {"n_heads", cfg.n_heads},
                     {"d_model", cfg.d_model},         {"d_ff", cfg.ffn_dim()},
                     {"vocab_size", cfg.vocab_size},   {"max_seq_len", cfg.max_seq_len},
                     {"tie_embeddings", cfg.tie_embeddings}, {"head_init_scale", cfg.head_init_scale}};
}

void from_json(const nlohmann::json& j, ToyTransformerConfig& cfg) {
  ToyTransformerConfig d;
  cfg.n_layers = j.value("n_layers", d.n_layers);
  cfg.n_heads = j.value("n_heads", d.n_heads);
  cfg.d_model = j.value("d_model", d.d_model);
  cfg.d_ff = j.value("d_ff", d.d_ff);
  cfg.vocab_size = j.value("vocab_size", d.vocab_size);
  cfg.max_seq_len = j.value("max_seq_len", d.max_seq_len);
  cfg.tie_embeddings = j.value("tie_embeddings", d.tie_embeddings);
  cfg.head_init_scale = j.value("head_init_scale", d.head_init_scale);
}

}  // namespace l1ra
