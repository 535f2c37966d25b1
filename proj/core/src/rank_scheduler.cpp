// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include "l1ra/rank_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "l1ra/errors.hpp"

namespace l1ra {
namespace {

// Column/row surgery on row-major buffers, shared by parameters and moments.
std::vector<double> keep_columns(std::span<const double> src, std::size_t rows, std::size_t cols,
                                 const std::vector<bool>& keep) {
  std::vector<double> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (keep[j]) out.push_back(src[i * cols + j]);
    }
  }
  return out;
}

std::vector<double> keep_rows(std::span<const double> src, std::size_t cols, const std::vector<bool>& keep) {
  std::vector<double> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(i * cols),
                            src.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }
  return out;
}

std::vector<double> append_column(std::span<const double> src, std::size_t rows, std::size_t cols,
                                  std::span<const double> column) {
  std::vector<double> out;
  out.reserve(rows * (cols + 1));
  for (std::size_t i = 0; i < rows; ++i) {
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(i * cols),
               src.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
    out.push_back(column[i]);
  }
  return out;
}

template <typename Fn>
void with_moments(AdamEState* optimizer, const Tensor& param, Fn&& fn) {
  if (!optimizer) return;
  if (Moments* mom = optimizer->find(param)) {
    mom->m = fn(std::span<const double>(mom->m));
    mom->v = fn(std::span<const double>(mom->v));
  }
}

void check_budget(std::span<const L1raAdapter> adapters, const SchedulerState& state) {
  const int ranks = total_rank(adapters);
  if (state.spare < 0 || ranks + state.spare != state.budget) {
    throw InvariantError(fmt::format("rank budget violated: ranks {} + spare {} != budget {}", ranks, state.spare,
                                     state.budget));
  }
}

}  // namespace

std::string_view carry_policy_name(CarryPolicy policy) {
  return policy == CarryPolicy::kCarryOver ? "carry-over" : "discard";
}

CarryPolicy parse_carry_policy(std::string_view name) {
  if (name == "carry-over") return CarryPolicy::kCarryOver;
  if (name == "discard") return CarryPolicy::kDiscard;
  throw ConfigError("unknown carry policy '" + std::string(name) + "' (expected carry-over or discard)");
}

long default_update_period(long total_steps, double ratio) {
  const auto period = static_cast<long>(std::ceil(ratio * static_cast<double>(total_steps)));
  return std::max(1L, period);
}

SchedulerState make_scheduler_state(std::span<const L1raAdapter> adapters, long update_period, CarryPolicy policy) {
  if (update_period < 1) throw ConfigError("rank scheduler: update_period must be >= 1");
  SchedulerState state;
  state.budget = total_rank(adapters);
  state.update_period = update_period;
  state.carry_policy = policy;
  return state;
}

int total_rank(std::span<const L1raAdapter> adapters) {
  int total = 0;
  for (const auto& a : adapters) total += a.rank();
  return total;
}

int prune(L1raAdapter& adapter, AdamEState* optimizer) {
  const auto r = static_cast<std::size_t>(adapter.rank());
  const auto gates = adapter.c().data();
  std::vector<bool> keep(r);
  int removed = 0;
  for (std::size_t i = 0; i < r; ++i) {
    keep[i] = gates[i] != 0.0;
    if (!keep[i]) ++removed;
  }
  if (removed == 0) return 0;

  const auto d_in = static_cast<std::size_t>(adapter.d_in());
  const auto d_out = static_cast<std::size_t>(adapter.d_out());
  const std::size_t new_r = r - static_cast<std::size_t>(removed);

  with_moments(optimizer, adapter.a(), [&](std::span<const double> s) { return keep_columns(s, d_in, r, keep); });
  with_moments(optimizer, adapter.c(), [&](std::span<const double> s) { return keep_columns(s, 1, r, keep); });
  with_moments(optimizer, adapter.b(), [&](std::span<const double> s) { return keep_rows(s, d_out, keep); });

  adapter.a().reset({d_in, new_r}, keep_columns(adapter.a().data(), d_in, r, keep));
  adapter.c().reset({new_r}, keep_columns(adapter.c().data(), 1, r, keep));
  adapter.b().reset({new_r, d_out}, keep_rows(adapter.b().data(), d_out, keep));
  adapter.check_consistent();
  return removed;
}

std::vector<L1raAdapter*> reallocation_order(std::span<L1raAdapter* const> unpruned) {
  struct Keyed {
    double min_c;
    L1raAdapter* adapter;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(unpruned.size());
  for (L1raAdapter* a : unpruned) {
    if (a->rank() == 0) {
      throw std::invalid_argument(fmt::format("reallocation_order: adapter at layer {} site {} has rank 0",
                                              a->site().layer, site_name(a->site().kind)));
    }
    const auto gates = a->c().data();
    if (std::find(gates.begin(), gates.end(), 0.0) != gates.end()) {
      throw std::invalid_argument(fmt::format("reallocation_order: adapter at layer {} site {} holds a zero gate",
                                              a->site().layer, site_name(a->site().kind)));
    }
    keyed.push_back({a->min_gate(), a});
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.min_c != y.min_c) return x.min_c > y.min_c;
    return x.adapter->site() < y.adapter->site();
  });
  std::vector<L1raAdapter*> ordered;
  ordered.reserve(keyed.size());
  for (const auto& k : keyed) ordered.push_back(k.adapter);
  return ordered;
}

void reallocate(L1raAdapter& adapter, Rng& rng, AdamEState* optimizer) {
  const auto r = static_cast<std::size_t>(adapter.rank());
  const auto d_in = static_cast<std::size_t>(adapter.d_in());
  const auto d_out = static_cast<std::size_t>(adapter.d_out());

  std::vector<double> column(d_in);
  for (double& v : column) v = rng.normal(0.0, adapter.init_sigma());
  const std::vector<double> zero_column(d_in, 0.0);
  const std::vector<double> zero_row(d_out, 0.0);

  with_moments(optimizer, adapter.a(),
               [&](std::span<const double> s) { return append_column(s, d_in, r, zero_column); });
  with_moments(optimizer, adapter.c(), [&](std::span<const double> s) {
    std::vector<double> out(s.begin(), s.end());
    out.push_back(0.0);
    return out;
  });
  with_moments(optimizer, adapter.b(), [&](std::span<const double> s) {
    std::vector<double> out(s.begin(), s.end());
    out.insert(out.end(), zero_row.begin(), zero_row.end());
    return out;
  });

  adapter.a().reset({d_in, r + 1}, append_column(adapter.a().data(), d_in, r, column));

  std::vector<double> gates(adapter.c().data().begin(), adapter.c().data().end());
  gates.push_back(1.0);
  double total = 0.0;
  for (double g : gates) total += g;
  if (std::abs(total) >= 1e-8) {
    for (double& g : gates) g /= total;
  }
  adapter.c().reset({r + 1}, std::move(gates));

  std::vector<double> b(adapter.b().data().begin(), adapter.b().data().end());
  b.insert(b.end(), zero_row.begin(), zero_row.end());
  adapter.b().reset({r + 1, d_out}, std::move(b));
  adapter.check_consistent();
}

void reallocate(L1raAdapter& adapter, std::uint64_t seed, AdamEState* optimizer) {
  Rng rng(seed);
  reallocate(adapter, rng, optimizer);
}

CycleResult rank_update_cycle(std::span<L1raAdapter> adapters, SchedulerState& state, long step, std::uint64_t seed,
                              AdamEState* optimizer) {
  CycleResult result;
  int spare = state.spare;
  std::vector<L1raAdapter*> unpruned;
  for (auto& adapter : adapters) {
    const auto gates = adapter.c().data();
    if (std::find(gates.begin(), gates.end(), 0.0) != gates.end()) {
      const int n = prune(adapter, optimizer);
      result.pruned += n;
      ++result.pruned_adapters;
      spare += n;
    } else if (adapter.rank() > 0) {
      unpruned.push_back(&adapter);
    }
  }

  const auto ordered = reallocation_order(unpruned);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(step)));
  while (spare > 0 && !ordered.empty()) {
    for (L1raAdapter* adapter : ordered) {
      if (spare == 0) break;
      reallocate(*adapter, rng, optimizer);
      --spare;
      ++result.reallocated;
    }
  }

  if (spare > 0 && state.carry_policy == CarryPolicy::kDiscard) {
    result.discarded = spare;
    state.budget -= spare;
    spare = 0;
  }
  state.spare = spare;
  check_budget(adapters, state);
  log_ranks(adapters, state, step);
  return result;
}

void log_ranks(std::span<const L1raAdapter> adapters, SchedulerState& state, long step) {
  for (const auto& adapter : adapters) {
    RankLogRecord rec;
    rec.step = step;
    rec.site = adapter.site();
    rec.rank = adapter.rank();
    if (rec.rank > 0) rec.min_c = adapter.min_gate();
    state.history.push_back(rec);
  }
}

void write_rank_history_csv(std::ostream& out, std::span<const RankLogRecord> history) {
  out << "step,layer,site,rank,min_c\n";
  for (const auto& rec : history) {
    out << fmt::format("{},{},{},{},", rec.step, rec.site.layer, site_name(rec.site.kind), rec.rank);
    if (rec.min_c) out << fmt::format("{}", *rec.min_c);
    out << '\n';
  }
}

std::vector<RankLogRecord> read_rank_history_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,layer,site,rank", 0) != 0) {
    throw std::runtime_error("rank history: missing or unexpected CSV header");
  }
  std::vector<RankLogRecord> history;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 5) throw std::runtime_error(fmt::format("rank history: line {} has {} fields", line_no, fields.size()));
    RankLogRecord rec;
    try {
      rec.step = std::stol(fields[0]);
      rec.site.layer = std::stoi(fields[1]);
      rec.site.kind = parse_site_kind(fields[2]);
      rec.rank = std::stoi(fields[3]);
      if (!fields[4].empty()) rec.min_c = std::stod(fields[4]);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("rank history: line {}: {}", line_no, e.what()));
    }
    history.push_back(rec);
  }
  return history;
}

}  // namespace l1ra
