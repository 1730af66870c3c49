// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "pimdse/crossbar.hpp"

using namespace pimdse::crossbar;

static void BM_Mvm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> w(-127, 127), a(-127, 127);
  IntMatrix m(n, n);
  for (auto& v : m.data) v = w(rng);
  std::vector<std::int64_t> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = a(rng);
  const auto pm = program_signed(m, 8, CrossbarSpec{64, 64, 2});
  for (auto _ : state) benchmark::DoNotOptimize(mvm(pm, x, 8, ConverterSpec{2, 10}));
}
BENCHMARK(BM_Mvm)->Arg(16)->Arg(64)->Arg(256);

static void BM_Program(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  IntMatrix m(n, n);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<std::int64_t>(i % 255) - 127;
  for (auto _ : state) benchmark::DoNotOptimize(program_signed(m, 8, CrossbarSpec{64, 64, 2}));
}
BENCHMARK(BM_Program)->Arg(64)->Arg(256);
