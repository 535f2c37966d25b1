// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "l1ra/adame.hpp"
#include "l1ra/adapter.hpp"
#include "l1ra/corpus.hpp"
#include "l1ra/model.hpp"
#include "l1ra/rank_scheduler.hpp"

namespace l1ra {

struct TrainConfig {
  long steps = 600;
  int batch_size = 8;
  int seq_len = 32;  // predicted positions per window; windows hold seq_len + 1 tokens
  int grad_accum = 1;
  double warmup_ratio = 0.05;
  double max_grad_norm = 1.0;  // <= 0 disables clipping
  long update_period = 0;      // 0 selects ceil(update_period_ratio * steps)
  double update_period_ratio = 0.05;
  long eval_every = 50;
  int eval_windows = 64;  // validation windows per eval point; 0 uses the whole split
  int eval_batch = 16;
  CarryPolicy carry_policy = CarryPolicy::kCarryOver;
  bool freeze_gates = false;
  bool scheduler_enabled = true;

  long effective_update_period() const;
  void validate() const;
};

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "file"
  std::string path;
  std::size_t synthetic_bytes = 120000;
  std::uint64_t seed = 7;
};

struct RunConfig {
  AdapterMode mode = AdapterMode::kL1ra;
  ToyTransformerConfig model;
  AdapterConfig adapter;
  AdamEConfig optim;
  TrainConfig train;
  DataConfig data;

  void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Throws ConfigError naming the path when the file is missing or malformed.
RunConfig load_run_config(const std::filesystem::path& path);

struct MetricRow {
  long step = 0;
  double data_loss = 0.0;  // mean training NLL since the previous row
  double ppl = 0.0;        // validation perplexity, data term only
  double l1_penalty = 0.0;
  int total_rank = 0;
  int spare = 0;
};

struct TrainRun {
  std::filesystem::path run_dir;
  RunConfig config;
  std::uint64_t seed = 0;
  std::vector<MetricRow> metrics;
  std::vector<RankLogRecord> rank_history;
  std::vector<double> step_losses;  // data loss of every optimizer step
  int budget = 0;
  int spare = 0;
  int prune_events = 0;  // (cycle, adapter) pairs that lost at least one rank
  int ranks_moved = 0;   // ranks pruned over the whole run
  double final_val_ppl = 0.0;
  double test_ppl = 0.0;
  std::uint64_t base_hash = 0;
  ToyTransformer model;
};

/// Linear warm-up over ceil(warmup_ratio * total) steps, then cosine decay to 0.
/// step is 1-based.
double lr_schedule(long step, long total, double warmup_ratio);

/// exp(mean next-token NLL) over all windows, data term only.
double evaluate_ppl(const ToyTransformer& model, std::span<const Window> windows, AdapterMode mode,
                    int batch_size = 16);

Corpus load_corpus(const RunConfig& cfg);

/// Runs training. When run_dir is non-empty the run files (config.json,
/// metrics.csv, ranks.csv, adapters.json, summary.json) are written there.
/// Throws TrainingAborted on a non-finite loss, after writing failure.json.
TrainRun train(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& run_dir = {});

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> metrics);

}  // namespace l1ra
