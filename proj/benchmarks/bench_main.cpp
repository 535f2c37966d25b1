// Copyright (c) 2026 The l1ra Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "l1ra/adame.hpp"
#include "l1ra/memory_gelato.hpp"
#include "l1ra/model.hpp"
#include "l1ra/ops.hpp"
#include "l1ra/rank_scheduler.hpp"

namespace {

using namespace l1ra;

Tensor gaussian(Shape shape, std::uint64_t seed, bool requires_grad = false) {
  Rng rng(seed);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.normal();
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = gaussian({n, n}, 1);
  const Tensor b = gaussian({n, n}, 2);
  for (auto _ : state) {
    Tape t;
    benchmark::DoNotOptimize(matmul(t, a, b));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  const ToyTransformerConfig cfg{.n_layers = 2, .n_heads = 4, .d_model = static_cast<int>(state.range(0)),
                                 .vocab_size = 256, .max_seq_len = 32};
  ToyTransformer model = build_model(cfg, 1);
  attach_adapters(model, AdapterConfig{.r_init = 4, .alpha = 4}, 2);
  const auto params = adapter_params(model, true);
  AdamEState opt(AdamEConfig{.lr = 1e-3, .l1 = 0.1});
  Rng rng(3);
  std::vector<std::vector<int>> windows(8, std::vector<int>(33));
  for (auto& w : windows) {
    for (int& tok : w) tok = static_cast<int>(rng.uniform_int(256));
  }
  const TokenBatch batch = make_batch(windows);
  for (auto _ : state) {
    for (const auto& p : params) {
      Tensor t = p.tensor;
      t.clear_grad();
    }
    Tape tape;
    const LossOutput out = forward_loss(tape, model, batch, 0.0);
    tape.backward(out.data_loss);
    adame_step(params, opt);
  }
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RankCycle(benchmark::State& state) {
  const ToyTransformerConfig cfg{.n_layers = 4, .n_heads = 4, .d_model = 64, .vocab_size = 256, .max_seq_len = 32};
  const ToyTransformer base = build_model(cfg, 1);
  for (auto _ : state) {
    state.PauseTiming();
    ToyTransformer model = base;
    model.adapters.clear();
    attach_adapters(model, AdapterConfig{.r_init = 8}, 2);
    Rng rng(4);
    for (auto& ad : model.adapters) {
      for (double& c : ad.c().data()) c = rng.bernoulli(0.3) ? 0.0 : rng.uniform();
    }
    SchedulerState sched = make_scheduler_state(model.adapters, 1);
    state.ResumeTiming();
    benchmark::DoNotOptimize(rank_update_cycle(model.adapters, sched, 1, 5));
  }
}
BENCHMARK(BM_RankCycle)->Unit(benchmark::kMicrosecond);

void BM_EstimatePeak(benchmark::State& state) {
  const gelato::ModelSpec m;
  gelato::TrainSpec t;
  for (auto _ : state) benchmark::DoNotOptimize(gelato::estimate_peak(m, t));
}
BENCHMARK(BM_EstimatePeak);

void BM_PlanRankBudget(benchmark::State& state) {
  const gelato::ModelSpec m;
  const gelato::TrainSpec t;
  for (auto _ : state) benchmark::DoNotOptimize(gelato::plan_rank_budget(m, t, 24.0 * (1ull << 30)));
}
BENCHMARK(BM_PlanRankBudget);

}  // namespace

BENCHMARK_MAIN();
