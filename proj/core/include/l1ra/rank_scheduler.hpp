// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "l1ra/adame.hpp"
#include "l1ra/adapter.hpp"

namespace l1ra {

/// What happens to spare ranks when no adapter is eligible to receive them.
enum class CarryPolicy {
  kCarryOver,  // keep them in `spare` for the next cycle
  kDiscard,    // drop them and shrink the budget accordingly
};

std::string_view carry_policy_name(CarryPolicy policy);
CarryPolicy parse_carry_policy(std::string_view name);

struct RankLogRecord {
  long step = 0;
  SiteId site;
  int rank = 0;
  std::optional<double> min_c;  // absent at rank 0
};

struct SchedulerState {
  int budget = 0;
  int spare = 0;
  long update_period = 1;
  CarryPolicy carry_policy = CarryPolicy::kCarryOver;
  std::vector<RankLogRecord> history;
};

/// ceil(ratio * total_steps), at least 1.
long default_update_period(long total_steps, double ratio = 0.05);

SchedulerState make_scheduler_state(std::span<const L1raAdapter> adapters, long update_period,
                                    CarryPolicy policy = CarryPolicy::kCarryOver);

/// Removes every slice whose gate is exactly zero: the column of A, the entry
/// of c and the row of B, plus the matching optimizer moments when `optimizer`
/// is given. Returns the number of slices removed.
int prune(L1raAdapter& adapter, AdamEState* optimizer = nullptr);

/// Eligible adapters ordered by decreasing minimum gate; ties go to the lower
/// (layer, kind). Throws std::invalid_argument for a rank-0 adapter or one
/// holding a zero gate.
std::vector<L1raAdapter*> reallocation_order(std::span<L1raAdapter* const> unpruned);

/// Grows the adapter by one rank: a fresh N(0, sigma^2) column of A, a zero row
/// of B and a unit gate, then rescales c to unit sum unless |sum(c)| < 1e-8.
/// Fresh zero moments are appended when `optimizer` is given.
void reallocate(L1raAdapter& adapter, Rng& rng, AdamEState* optimizer = nullptr);
void reallocate(L1raAdapter& adapter, std::uint64_t seed, AdamEState* optimizer = nullptr);

struct CycleResult {
  int pruned = 0;       // slices removed this cycle
  int pruned_adapters = 0;
  int reallocated = 0;  // ranks granted this cycle
  int discarded = 0;    // ranks dropped under CarryPolicy::kDiscard
};

/// One prune/reallocate cycle over all adapters. Appends a history record per
/// site and throws InvariantError if ranks plus spare no longer equal the budget.
CycleResult rank_update_cycle(std::span<L1raAdapter> adapters, SchedulerState& state, long step,
                              std::uint64_t seed, AdamEState* optimizer = nullptr);

/// Appends one record per adapter at `step`.
void log_ranks(std::span<const L1raAdapter> adapters, SchedulerState& state, long step);

int total_rank(std::span<const L1raAdapter> adapters);

/// CSV with header `step,layer,site,rank,min_c`; min_c is empty at rank 0.
void write_rank_history_csv(std::ostream& out, std::span<const RankLogRecord> history);
std::vector<RankLogRecord> read_rank_history_csv(std::istream& in);

}  // namespace l1ra
