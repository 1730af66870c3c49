// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "pimdse/cost_model.hpp"
#include "pimdse/evaluator.hpp"
#include "pimdse/mapping.hpp"
#include "pimdse/pipeline.hpp"
#include "pimdse/search.hpp"

using namespace pimdse;

static void BM_MapModel(benchmark::State& state) {
  std::uint64_t s = 0;
  for (auto _ : state) benchmark::DoNotOptimize(map_model(sample_random(s++ % 64)));
}
BENCHMARK(BM_MapModel);

static void BM_HardwareMetrics(benchmark::State& state) {
  std::vector<DesignPoint> pts;
  for (std::uint64_t s = 0; s < 64; ++s) pts.push_back(sample_random(s));
  std::size_t i = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(hardware_metrics(pts[i++ % pts.size()], default_tech(), 40.0));
}
BENCHMARK(BM_HardwareMetrics);

static void BM_Surrogate(benchmark::State& state) {
  const DesignPoint p = sample_random(3);
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_loss(p, {}));
}
BENCHMARK(BM_Surrogate);
