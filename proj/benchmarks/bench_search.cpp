// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "pimdse/search.hpp"

using namespace pimdse;

// Cost of one generation: init population plus state.range(0) generations.
static void BM_SearchGenerations(benchmark::State& state) {
  SearchConfig cfg;
  cfg.num_generations = static_cast<int>(state.range(0));
  cfg.population_init_size = 20;
  const Scorer scorer = make_scorer(Evaluator({}, {}), default_tech(), 40.0);
  for (auto _ : state) benchmark::DoNotOptimize(run_search(cfg, default_space(), scorer));
}
BENCHMARK(BM_SearchGenerations)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_Mutate(benchmark::State& state) {
  const DesignPoint p = sample_random(5);
  std::uint64_t s = 0;
  for (auto _ : state) benchmark::DoNotOptimize(mutate(p, s++, 1));
}
BENCHMARK(BM_Mutate);
