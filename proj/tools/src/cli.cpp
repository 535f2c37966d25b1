// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra_cli/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "l1ra/errors.hpp"
#include "l1ra/memory_gelato.hpp"
#include "l1ra/model.hpp"
#include "l1ra/rank_scheduler.hpp"
#include "l1ra/report.hpp"
#include "l1ra/trainer.hpp"

namespace l1ra::cli {
namespace {

namespace fs = std::filesystem;

template <typename T>
T load_spec(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {} file {}", what, path));
  try {
    return nlohmann::json::parse(in).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("{} file {}: {}", what, path, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{} file {}: {}", what, path, e.what()));
  }
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::string mode;
};

struct SpecArgs {
  std::string model_spec;
  std::string train_spec;
  bool json = false;
  std::string memory_budget;
};

struct ReportArgs {
  std::string run;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.mode.empty()) cfg.mode = parse_adapter_mode(a.mode);
  const TrainRun run = train(cfg, a.seed, a.out);
  out << fmt::format("mode {} seed {} steps {}\n", adapter_mode_name(cfg.mode), a.seed, cfg.train.steps);
  out << fmt::format("budget {} final rank {} spare {} prune events {}\n", run.budget,
                     total_rank(run.model.adapters), run.spare, run.prune_events);
  out << fmt::format("val ppl {:.4f} test ppl {:.4f}\n", run.final_val_ppl, run.test_ppl);
  out << "run written to " << a.out << "\n";
  return kExitOk;
}

int cmd_estimate(const SpecArgs& a, std::ostream& out) {
  const auto model = load_spec<gelato::ModelSpec>(a.model_spec, "model spec");
  const auto train_spec = load_spec<gelato::TrainSpec>(a.train_spec, "train spec");
  const gelato::MemoryEstimate e = gelato::estimate_breakdown(model, train_spec);
  if (a.json) {
    out << nlohmann::json(e).dump(2) << "\n";
  } else {
    gelato::print_breakdown(out, e);
  }
  return kExitOk;
}

int cmd_plan(const SpecArgs& a, std::ostream& out, std::ostream& err) {
  const auto model = load_spec<gelato::ModelSpec>(a.model_spec, "model spec");
  auto train_spec = load_spec<gelato::TrainSpec>(a.train_spec, "train spec");
  double limit = 0.0;
  try {
    limit = gelato::parse_byte_quantity(a.memory_budget);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  int rank = 0;
  try {
    rank = gelato::plan_rank_budget(model, train_spec, limit);
  } catch (const gelato::InfeasibleBudget& e) {
    err << fmt::format("error: infeasible memory budget: rank-0 footprint is {:.0f} B ({:.2f} MiB), limit {:.0f} B\n",
                       e.rank0_bytes(), e.rank0_bytes() / (1024.0 * 1024.0), limit);
    return kExitFailure;
  }
  if (rank == 0) err << "warning: not even rank 1 fits; only the adapter-free footprint is within the limit\n";
  train_spec.adapter_rank_per_site = rank;
  out << fmt::format("max_rank_per_site {}\n", rank);
  out << fmt::format("total_rank_budget {}\n", kSitesPerLayer * model.n_layers * rank);
  out << fmt::format("estimated_peak_bytes {:.0f}\n", gelato::estimate_peak(model, train_spec));
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path run_dir(a.run);
  if (!fs::is_directory(run_dir)) throw ConfigError("run directory not found: " + a.run);
  const fs::path ranks = run_dir / "ranks.csv";
  std::ifstream in(ranks);
  if (!in) throw ConfigError("cannot open " + ranks.string());
  const auto history = read_rank_history_csv(in);
  for (const auto& path : export_rank_summaries(history, a.out)) out << "wrote " << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"L1RA adapter training, memory estimation and rank reports", "l1ra"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train adapters on a toy transformer");
  train_cmd->add_option("--config", train_args.config, "Run config JSON")->required();
  train_cmd->add_option("--out", train_args.out, "Run output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--mode", train_args.mode, "Override the adapter mode")
      ->check(CLI::IsMember({"l1ra", "lora"}));

  SpecArgs spec_args;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate peak training memory");
  estimate_cmd->add_option("--model-spec", spec_args.model_spec, "Model spec JSON")->required();
  estimate_cmd->add_option("--train-spec", spec_args.train_spec, "Train spec JSON")->required();
  estimate_cmd->add_flag("--json", spec_args.json, "Emit JSON instead of a table");

  auto* plan_cmd = app.add_subcommand("plan", "Find the largest per-site rank within a memory budget");
  plan_cmd->add_option("--model-spec", spec_args.model_spec, "Model spec JSON")->required();
  plan_cmd->add_option("--train-spec", spec_args.train_spec, "Train spec JSON (rank ignored)")->required();
  plan_cmd->add_option("--memory-budget", spec_args.memory_budget, "Limit, e.g. 24GB")->required();

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Export rank summaries and plots for a run");
  report_cmd->add_option("--run", report_args.run, "Run directory")->required();
  report_cmd->add_option("--out", report_args.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*estimate_cmd) return cmd_estimate(spec_args, out);
    if (*plan_cmd) return cmd_plan(spec_args, out, err);
    return cmd_report(report_args, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TrainingAborted& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace l1ra::cli
