// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "l1ra/adapter.hpp"
#include "l1ra/rank_scheduler.hpp"

namespace l1ra {

using KindRow = std::array<double, kSitesPerLayer>;

struct RankSummaries {
  std::vector<long> steps;                 // distinct logged steps, ascending
  std::vector<KindRow> kind_mean_by_step;  // mean rank over layers, one row per step
  KindRow final_mean{};                    // per kind, at the last step
  KindRow final_std{};                     // population std over layers
  std::vector<std::array<int, kSitesPerLayer>> final_grid;  // [layer][kind]
  int n_layers = 0;
};

/// Throws std::invalid_argument on an empty history or when a logged step is
/// missing any (layer, kind) cell.
RankSummaries summarize_ranks(std::span<const RankLogRecord> history);

/// Writes rank_history.csv, kind_mean_rank_by_step.csv, final_rank_by_kind.csv
/// and final_rank_grid.csv, plus rank_evolution.svg, final_rank_distribution.svg
/// and final_rank_grid.svg, into out_dir. Returns the files written.
std::vector<std::filesystem::path> export_rank_summaries(std::span<const RankLogRecord> history,
                                                         const std::filesystem::path& out_dir);

std::string rank_history_csv(std::span<const RankLogRecord> history);
std::string kind_mean_csv(const RankSummaries& s);
std::string final_by_kind_csv(const RankSummaries& s);
std::string final_grid_csv(const RankSummaries& s);

std::string rank_evolution_svg(const RankSummaries& s);
std::string final_distribution_svg(const RankSummaries& s);
std::string final_grid_svg(const RankSummaries& s);

}  // namespace l1ra
