// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"
#include "pimdse/search.hpp"

using namespace pimdse;

namespace {

// Cheap scorer: surrogate loss plus metrics derived from the point shape.
Score toy_score(const DesignPoint& p) {
  Score s;
  s.loss = surrogate_loss(p, {}).log_loss;
  double width = 0, ops = 0;
  for (const BlockConfig& b : p.model.blocks) {
    width += b.dim_d + b.dim_s;
    ops += static_cast<double>(b.dense_ops.size() + b.sparse_ops.size());
  }
  s.metrics = {ops, width, static_cast<double>(p.reram.adc_bits)};
  return s;
}

SearchConfig small_config() {
  SearchConfig cfg;
  cfg.num_generations = 20;
  cfg.population_init_size = 12;
  cfg.num_children = 4;
  cfg.tournament_size = 4;
  cfg.seed = 3;
  cfg.top_k = 5;
  return cfg;
}

PopulationEntry entry(double criterion, std::uint64_t order) {
  PopulationEntry e;
  e.criterion = criterion;
  e.order = order;
  return e;
}

}  // namespace

TEST(Criterion, Examples) {
  EXPECT_DOUBLE_EQ(criterion(0.44, {2, 4, 1}, {0.1, 0.05, 0.1}, {1, 2, 1}), 0.44 + 0.2 + 0.1 + 0.1);
  EXPECT_DOUBLE_EQ(criterion(0.44, {9, 9, 9}, {0, 0, 0}, {1, 1, 1}), 0.44);
  EXPECT_DOUBLE_EQ(criterion(0.5, {3, 7, 11}, {1, 1, 1}, {3, 7, 11}), 3.5);
}

TEST(Tournament, SingleEntryAndFullSize) {
  SearchConfig cfg;
  std::mt19937_64 rng(0);
  EXPECT_EQ(sample_and_select({entry(1, 0)}, cfg, rng), 0u);
  EXPECT_THROW(sample_and_select({}, cfg, rng), std::invalid_argument);

  std::vector<PopulationEntry> pop;
  for (int i = 0; i < 10; ++i) pop.push_back(entry(10 - (i % 7), static_cast<std::uint64_t>(i)));
  cfg.tournament_size = 10;
  // Minimum 4 appears at i = 6; ties to the earlier insertion.
  for (int t = 0; t < 20; ++t) EXPECT_EQ(sample_and_select(pop, cfg, rng), 6u);
  cfg.tournament_size = 50;
  EXPECT_EQ(sample_and_select(pop, cfg, rng), 6u);
}

TEST(Tournament, DeterministicAndDistinct) {
  std::vector<PopulationEntry> pop;
  for (int i = 0; i < 30; ++i) pop.push_back(entry(i, static_cast<std::uint64_t>(i)));
  SearchConfig cfg;
  cfg.tournament_size = 3;
  std::mt19937_64 a(5), b(5);
  std::map<std::size_t, int> hits;
  for (int t = 0; t < 3000; ++t) {
    const std::size_t x = sample_and_select(pop, cfg, a);
    ASSERT_EQ(x, sample_and_select(pop, cfg, b));
    ++hits[x];
  }
  // Winner is the min of 3 distinct draws, so the two worst never win.
  EXPECT_EQ(hits.count(28), 0u);
  EXPECT_EQ(hits.count(29), 0u);
  EXPECT_GT(hits[0], hits[10]);
}

TEST(Search, InvariantsHold) {
  const SearchConfig cfg = small_config();
  int calls = 0;
  const SearchResult r = run_search(cfg, default_space(), toy_score, [&](const SearchResult& s) {
    ++calls;
    EXPECT_EQ(s.population.size(), static_cast<std::size_t>(cfg.population_init_size));
  });
  EXPECT_EQ(calls, cfg.num_generations);
  ASSERT_EQ(r.log.generations.size(), 20u);
  double prev = r.log.initial_best;
  for (const GenerationLog& g : r.log.generations) {
    EXPECT_LE(g.best, prev);
    EXPECT_LE(g.best, g.median);
    EXPECT_EQ(g.child_ids.size(), 4u);
    prev = g.best;
  }
  ASSERT_EQ(r.top.size(), 5u);
  for (std::size_t i = 1; i < r.population.size(); ++i)
    EXPECT_LE(r.population[i - 1].criterion, r.population[i].criterion);
  for (const PopulationEntry& e : r.population) {
    EXPECT_NO_THROW(validate(e.point, default_space()));
    EXPECT_DOUBLE_EQ(e.criterion, criterion(e.loss, e.metrics, cfg.lambda, r.log.targets));
  }
}

TEST(Search, ByteReproducibleAcrossWorkerCounts) {
  SearchConfig cfg = small_config();
  const std::string a = to_json(run_search(cfg, default_space(), toy_score).log).dump();
  cfg.workers = 4;
  const std::string b = to_json(run_search(cfg, default_space(), toy_score).log).dump();
  EXPECT_EQ(a, b);
  cfg.seed = 4;
  EXPECT_NE(a, to_json(run_search(cfg, default_space(), toy_score).log).dump());
}

TEST(Search, TargetsFromInitialMedians) {
  SearchConfig cfg = small_config();
  cfg.num_generations = 1;
  cfg.population_init_size = 3;
  std::vector<double> widths;
  for (std::uint64_t d = 0; d < 3; ++d)
    widths.push_back(toy_score(sample_random(derive_seed(cfg.seed, 1, d))).metrics[1]);
  std::sort(widths.begin(), widths.end());
  EXPECT_DOUBLE_EQ(run_search(cfg, default_space(), toy_score).log.targets[1], widths[1]);
  cfg.targets = Metrics{1, 2, 3};
  EXPECT_EQ(run_search(cfg, default_space(), toy_score).log.targets, (Metrics{1, 2, 3}));
}

TEST(Search, FailingCandidatesSkippedThenAbort) {
  SearchConfig cfg = small_config();
  int n = 0;
  auto flaky = [&](const DesignPoint& p) {
    if (++n % 5 == 0) throw Error("boom");
    return toy_score(p);
  };
  const SearchResult r = run_search(cfg, default_space(), flaky);
  EXPECT_EQ(r.population.size(), 12u);
  int skipped = 0;
  for (const auto& g : r.log.generations) skipped += g.skipped;
  EXPECT_GT(skipped, 0);

  cfg.max_skipped = 2;
  EXPECT_THROW(run_search(cfg, default_space(), [](const DesignPoint&) -> Score {
                 throw Error("always");
               }),
               Error);
}

TEST(Search, RealScorerShortRun) {
  SearchConfig cfg = small_config();
  cfg.num_generations = 3;
  const Scorer s = make_scorer(Evaluator({}, {}), default_tech(), 40.0);
  const SearchResult r = run_search(cfg, default_space(), s);
  for (const PopulationEntry& e : r.population)
    for (double m : e.metrics) EXPECT_GT(m, 0);
}

TEST(Config, ValidationAndJson) {
  SearchConfig cfg;
  EXPECT_NO_THROW(check_config(cfg));
  cfg.num_children = 0;
  EXPECT_THROW(check_config(cfg), ValidationError);
  cfg = {};
  cfg.lambda = {0.1, -1, 0};
  EXPECT_THROW(check_config(cfg), ValidationError);
  cfg = {};
  cfg.targets = Metrics{1, 0, 1};
  EXPECT_THROW(check_config(cfg), ValidationError);

  SearchConfig c2;
  c2.seed = 77;
  c2.targets = Metrics{1, 2, 3};
  c2.overlap = false;
  const SearchConfig back = search_config_from_json(to_json(c2));
  EXPECT_EQ(to_json(back), to_json(c2));
  EXPECT_THROW(search_config_from_json({{"generations", 3}}), ParseError);
  EXPECT_THROW(search_config_from_json({{"seed", -1}}), ParseError);
  EXPECT_THROW(search_config_from_json({{"lambda", {1, 2}}}), ParseError);
  EXPECT_THROW(search_config_from_json({{"tournament_size", 0}}), ValidationError);
}

TEST(Log, CriterionCsv) {
  SearchLog log;
  log.initial_best = 1.5;
  log.initial_median = 2;
  GenerationLog g;
  g.generation = 1;
  g.best = 1.25;
  g.median = 1.75;
  log.generations.push_back(g);
  EXPECT_EQ(criterion_csv(log), "generation,best,median\n0,1.5,2\n1,1.25,1.75\n");
}
