// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "l1ra/errors.hpp"
#include "l1ra/ops.hpp"

namespace l1ra {
namespace {

enum SeedStream : std::uint64_t { kBaseSeed = 1, kAdapterSeed, kShuffleSeed, kDropoutSeed, kReallocSeed };

class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.uniform_int(i)]);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  Rng rng_;
};

double clip_gradients(std::span<const ParamRef> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& p : params) {
      Tensor t = p.tensor;
      if (!t.has_grad()) continue;
      for (double& g : t.grad()) g *= factor;
    }
  }
  return norm;
}

double gate_l1_total(const ToyTransformer& model) {
  double total = 0.0;
  for (const auto& ad : model.adapters) total += ad.gate_l1();
  return total;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

long TrainConfig::effective_update_period() const {
  return update_period > 0 ? update_period : default_update_period(steps, update_period_ratio);
}

void TrainConfig::validate() const {
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (batch_size < 1 || seq_len < 1 || grad_accum < 1) {
    throw ConfigError("train: batch_size, seq_len and grad_accum must be >= 1");
  }
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) throw ConfigError("train: warmup_ratio must be in [0, 1)");
  if (eval_every < 1 || eval_batch < 1 || eval_windows < 0) throw ConfigError("train: invalid eval settings");
  if (update_period < 0 || !(update_period_ratio > 0.0)) throw ConfigError("train: invalid rank update period");
}

void RunConfig::validate() const {
  model.validate();
  AdapterConfig probe = adapter.for_site(model.d_model, model.d_model);
  probe.validate();
  optim.validate();
  train.validate();
  if (train.seq_len > model.max_seq_len) {
    throw ConfigError(fmt::format("train.seq_len {} exceeds model.max_seq_len {}", train.seq_len, model.max_seq_len));
  }
  if (model.vocab_size < kByteVocab) throw ConfigError("model.vocab_size must cover the 256 byte tokens");
  if (data.source != "synthetic" && data.source != "file") {
    throw ConfigError("data.source must be 'synthetic' or 'file'");
  }
  if (data.source == "file" && data.path.empty()) throw ConfigError("data.path is required for source 'file'");
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.mode = parse_adapter_mode(j.value("mode", std::string("l1ra")));
    if (j.contains("model")) cfg.model = j.at("model").get<ToyTransformerConfig>();
    if (j.contains("adapter")) {
      const auto& a = j.at("adapter");
      cfg.adapter.r_init = a.value("r_init", cfg.adapter.r_init);
      cfg.adapter.alpha = a.value("alpha", cfg.adapter.alpha);
      cfg.adapter.dropout_p = a.value("dropout_p", cfg.adapter.dropout_p);
      cfg.adapter.init_sigma = a.value("init_sigma", cfg.adapter.init_sigma);
    }
    if (j.contains("optim")) {
      const auto& o = j.at("optim");
      cfg.optim.lr = o.value("lr", cfg.optim.lr);
      cfg.optim.lr_c = o.value("lr_c", cfg.optim.lr_c);
      cfg.optim.beta1 = o.value("beta1", cfg.optim.beta1);
      cfg.optim.beta2 = o.value("beta2", cfg.optim.beta2);
      cfg.optim.eps = o.value("eps", cfg.optim.eps);
      cfg.optim.l1 = o.value("l1", cfg.optim.l1);
      cfg.optim.l2 = o.value("l2", cfg.optim.l2);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& c = cfg.train;
      c.steps = t.value("steps", c.steps);
      c.batch_size = t.value("batch_size", c.batch_size);
      c.seq_len = t.value("seq_len", c.seq_len);
      c.grad_accum = t.value("grad_accum", c.grad_accum);
      c.warmup_ratio = t.value("warmup_ratio", c.warmup_ratio);
      c.max_grad_norm = t.value("max_grad_norm", c.max_grad_norm);
      c.update_period = t.value("update_period", c.update_period);
      c.update_period_ratio = t.value("update_period_ratio", c.update_period_ratio);
      c.eval_every = t.value("eval_every", c.eval_every);
      c.eval_windows = t.value("eval_windows", c.eval_windows);
      c.eval_batch = t.value("eval_batch", c.eval_batch);
      c.carry_policy = parse_carry_policy(t.value("carry_policy", std::string(carry_policy_name(c.carry_policy))));
      c.freeze_gates = t.value("freeze_gates", c.freeze_gates);
      c.scheduler_enabled = t.value("scheduler_enabled", c.scheduler_enabled);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      cfg.data.source = d.value("source", cfg.data.source);
      cfg.data.path = d.value("path", cfg.data.path);
      cfg.data.synthetic_bytes = d.value("synthetic_bytes", cfg.data.synthetic_bytes);
      cfg.data.seed = d.value("seed", cfg.data.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  const auto& t = cfg.train;
  return nlohmann::json{
      {"mode", std::string(adapter_mode_name(cfg.mode))},
      {"model", cfg.model},
      {"adapter",
       {{"r_init", cfg.adapter.r_init},
        {"alpha", cfg.adapter.alpha},
        {"dropout_p", cfg.adapter.dropout_p},
        {"init_sigma", cfg.adapter.init_sigma}}},
      {"optim",
       {{"lr", cfg.optim.lr},
        {"lr_c", cfg.optim.lr_c},
        {"beta1", cfg.optim.beta1},
        {"beta2", cfg.optim.beta2},
        {"eps", cfg.optim.eps},
        {"l1", cfg.optim.l1},
        {"l2", cfg.optim.l2}}},
      {"train",
       {{"steps", t.steps},
        {"batch_size", t.batch_size},
        {"seq_len", t.seq_len},
        {"grad_accum", t.grad_accum},
        {"warmup_ratio", t.warmup_ratio},
        {"max_grad_norm", t.max_grad_norm},
        {"update_period", t.effective_update_period()},
        {"update_period_ratio", t.update_period_ratio},
        {"eval_every", t.eval_every},
        {"eval_windows", t.eval_windows},
        {"eval_batch", t.eval_batch},
        {"carry_policy", std::string(carry_policy_name(t.carry_policy))},
        {"freeze_gates", t.freeze_gates},
        {"scheduler_enabled", t.scheduler_enabled}}},
      {"data",
       {{"source", cfg.data.source},
        {"path", cfg.data.path},
        {"synthetic_bytes", cfg.data.synthetic_bytes},
        {"seed", cfg.data.seed}}},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

double lr_schedule(long step, long total, double warmup_ratio) {
  const auto warmup = static_cast<long>(std::ceil(warmup_ratio * static_cast<double>(total)));
  if (step <= warmup && warmup > 0) return static_cast<double>(step) / static_cast<double>(warmup);
  const long span = total - warmup;
  if (span <= 0) return 1.0;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * std::clamp(progress, 0.0, 1.0)));
}

double evaluate_ppl(const ToyTransformer& model, std::span<const Window> windows, AdapterMode mode, int batch_size) {
  if (windows.empty()) throw std::invalid_argument("evaluate_ppl: empty split");
  if (batch_size < 1) throw std::invalid_argument("evaluate_ppl: batch_size must be >= 1");
  double nll_sum = 0.0;
  std::size_t tokens = 0;
  const ForwardOptions opt{mode, false, nullptr};
  for (std::size_t start = 0; start < windows.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(windows.size(), start + static_cast<std::size_t>(batch_size));
    const TokenBatch batch = make_batch(windows.subspan(start, end - start));
    Tape tape;
    const LossOutput loss = forward_loss(tape, model, batch, 0.0, opt);
    nll_sum += loss.data_loss.item() * static_cast<double>(batch.targets.size());
    tokens += batch.targets.size();
  }
  return std::exp(nll_sum / static_cast<double>(tokens));
}

Corpus load_corpus(const RunConfig& cfg) {
  const int window_len = cfg.train.seq_len + 1;
  if (cfg.data.source == "file") return tokenize_corpus(cfg.data.path, window_len);
  return tokenize_corpus_text(synthetic_grammar_text(cfg.data.synthetic_bytes, cfg.data.seed), window_len);
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> metrics) {
  out << "step,data_loss,ppl,l1_penalty,total_rank,spare\n";
  for (const auto& m : metrics) {
    out << fmt::format("{},{},{},{},{},{}\n", m.step, m.data_loss, m.ppl, m.l1_penalty, m.total_rank, m.spare);
  }
}

TrainRun train(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& run_dir) {
  cfg.validate();
  const TrainConfig& tc = cfg.train;
  const bool l1ra = cfg.mode == AdapterMode::kL1ra;
  const bool train_gates = l1ra && !tc.freeze_gates;
  const bool scheduling = l1ra && tc.scheduler_enabled;
  const double l1 = l1ra ? cfg.optim.l1 : 0.0;

  const Corpus corpus = load_corpus(cfg);
  if (corpus.train.empty() || corpus.val.empty()) {
    throw std::invalid_argument("corpus too small: need at least one training and one validation window");
  }
  std::span<const Window> val_windows(corpus.val);
  if (tc.eval_windows > 0 && val_windows.size() > static_cast<std::size_t>(tc.eval_windows)) {
    val_windows = val_windows.first(static_cast<std::size_t>(tc.eval_windows));
  }

  TrainRun run;
  run.run_dir = run_dir;
  run.config = cfg;
  run.seed = seed;
  run.model = build_model(cfg.model, derive_seed(seed, kBaseSeed));
  ToyTransformer& model = run.model;
  attach_adapters(model, cfg.adapter, derive_seed(seed, kAdapterSeed));
  for (auto& ad : model.adapters) ad.c().set_requires_grad(train_gates);
  const std::uint64_t base_hash = base_weights_hash(model);

  AdamEConfig optim_cfg = cfg.optim;
  optim_cfg.l1 = l1;
  AdamEState optimizer(optim_cfg);
  SchedulerState sched = make_scheduler_state(model.adapters, tc.effective_update_period(), tc.carry_policy);
  log_ranks(model.adapters, sched, 0);

  BatchSampler sampler(corpus.train.size(), derive_seed(seed, kShuffleSeed));
  Rng dropout_rng(derive_seed(seed, kDropoutSeed));
  const ForwardOptions train_opt{cfg.mode, true, &dropout_rng};
  const auto params = adapter_params(model, train_gates);
  const auto next_batch = [&]() {
    std::vector<Window> picked;
    for (std::size_t idx : sampler.next(static_cast<std::size_t>(tc.batch_size))) picked.push_back(corpus.train[idx]);
    return make_batch(picked);
  };

  const auto record_metrics = [&](long step, double data_loss) {
    MetricRow row;
    row.step = step;
    row.data_loss = data_loss;
    row.ppl = evaluate_ppl(model, val_windows, cfg.mode, tc.eval_batch);
    row.l1_penalty = l1 * gate_l1_total(model);
    row.total_rank = total_rank(model.adapters);
    row.spare = sched.spare;
    run.metrics.push_back(row);
  };

  const auto abort_run = [&](long step, double loss, const std::string& why) {
    if (!run_dir.empty()) {
      std::filesystem::create_directories(run_dir);
      nlohmann::json ranks = nlohmann::json::array();
      for (const auto& ad : model.adapters) {
        ranks.push_back({{"layer", ad.site().layer}, {"site", site_name(ad.site().kind)}, {"rank", ad.rank()},
                         {"gate_l1", ad.gate_l1()}});
      }
      const nlohmann::json dump{{"step", step}, {"loss", std::isfinite(loss) ? nlohmann::json(loss) : nlohmann::json(fmt::format("{}", loss))},
                                {"reason", why}, {"spare", sched.spare}, {"budget", sched.budget}, {"ranks", ranks}};
      write_text(run_dir / "failure.json", dump.dump(2) + "\n");
    }
    throw TrainingAborted(fmt::format("training aborted at step {}: {}", step, why));
  };

  {
    Tape probe;
    record_metrics(0, forward_loss(probe, model, next_batch(), 0.0, {cfg.mode, false, nullptr}).data_loss.item());
  }

  double window_loss = 0.0;
  long window_steps = 0;
  for (long step = 1; step <= tc.steps; ++step) {
    for (const auto& p : params) {
      Tensor t = p.tensor;
      t.clear_grad();
    }
    double step_loss = 0.0;
    for (int micro = 0; micro < tc.grad_accum; ++micro) {
      Tape tape;
      const LossOutput out = forward_loss(tape, model, next_batch(), 0.0, train_opt);
      const double value = out.data_loss.item();
      if (!std::isfinite(value)) abort_run(step, value, "non-finite data loss");
      step_loss += value / tc.grad_accum;
      tape.backward(tc.grad_accum == 1 ? out.data_loss : scale(tape, out.data_loss, 1.0 / tc.grad_accum));
    }
    run.step_losses.push_back(step_loss);
    window_loss += step_loss;
    ++window_steps;

    clip_gradients(params, tc.max_grad_norm);
    try {
      adame_step(params, optimizer, lr_schedule(step, tc.steps, tc.warmup_ratio));
    } catch (const std::invalid_argument& e) {
      abort_run(step, step_loss, e.what());
    }

    if (scheduling && step % sched.update_period == 0) {
      const CycleResult cycle =
          rank_update_cycle(model.adapters, sched, step, derive_seed(seed, kReallocSeed), &optimizer);
      run.prune_events += cycle.pruned_adapters;
      run.ranks_moved += cycle.pruned;
    }

    if (step % tc.eval_every == 0 || step == tc.steps) {
      record_metrics(step, window_loss / static_cast<double>(window_steps));
      window_loss = 0.0;
      window_steps = 0;
    }
  }
  if (sched.history.back().step != tc.steps) log_ranks(model.adapters, sched, tc.steps);

  if (base_weights_hash(model) != base_hash) throw InvariantError("base weights changed during training");
  run.base_hash = base_hash;
  run.rank_history = sched.history;
  run.budget = sched.budget;
  run.spare = sched.spare;
  run.final_val_ppl = evaluate_ppl(model, corpus.val, cfg.mode, tc.eval_batch);
  run.test_ppl = corpus.test.empty() ? run.final_val_ppl : evaluate_ppl(model, corpus.test, cfg.mode, tc.eval_batch);

  if (!run_dir.empty()) {
    std::filesystem::create_directories(run_dir);
    nlohmann::json config_json = run_config_to_json(cfg);
    config_json["seed"] = seed;
    write_text(run_dir / "config.json", config_json.dump(2) + "\n");
    {
      std::ofstream out(run_dir / "metrics.csv", std::ios::binary);
      write_metrics_csv(out, run.metrics);
    }
    {
      std::ofstream out(run_dir / "ranks.csv", std::ios::binary);
      write_rank_history_csv(out, run.rank_history);
    }
    save_adapter_checkpoint(run_dir / "adapters.json", model.adapters);
    const nlohmann::json summary{{"mode", std::string(adapter_mode_name(cfg.mode))},
                                 {"seed", seed},
                                 {"steps", tc.steps},
                                 {"budget", run.budget},
                                 {"final_total_rank", total_rank(model.adapters)},
                                 {"spare", run.spare},
                                 {"prune_events", run.prune_events},
                                 {"ranks_moved", run.ranks_moved},
                                 {"final_val_ppl", run.final_val_ppl},
                                 {"test_ppl", run.test_ppl},
                                 {"base_weights_hash", fmt::format("{:016x}", base_hash)}};
    write_text(run_dir / "summary.json", summary.dump(2) + "\n");
  }
  return run;
}

}  // namespace l1ra
