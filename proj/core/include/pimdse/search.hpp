// SPDX-License-Identifier: Apache-2.0
//
// Regularized-evolution search over design points: random initial
// population, tournament parent selection, chained mutations, scalarized
// criterion and truncation of the worst entries.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pimdse/cost_model.hpp"
#include "pimdse/design_space.hpp"
#include "pimdse/evaluator.hpp"

namespace pimdse {

/// [1/throughput, area, power]
using Metrics = std::array<double, 3>;
inline constexpr const char* kMetricNames[3] = {"inv_throughput", "area", "power"};

struct SearchConfig {
  int num_generations = 240;
  int num_children = 8;
  int num_mutations = 1;
  Metrics lambda{0.1, 0.1, 0.1};
  std::optional<Metrics> targets;  // medians of the initial population when unset
  int population_init_size = 50;
  int tournament_size = 10;
  std::uint64_t seed = 0;
  int workers = 1;
  int max_skipped = 64;  // failed candidate evaluations before aborting
  int top_k = 15;
  bool overlap = true;
  SurrogateParams surrogate;
};

/// Throws ValidationError for counts < 1, negative lambda or non-positive
/// targets.
void check_config(const SearchConfig& cfg);

nlohmann::json to_json(const SearchConfig& cfg);
SearchConfig search_config_from_json(const nlohmann::json& doc);

double criterion(double loss, const Metrics& metrics, const Metrics& lambda,
                 const Metrics& targets);

struct PopulationEntry {
  DesignPoint point;
  double loss = 0;
  Metrics metrics{};
  double criterion = 0;
  std::uint64_t order = 0;  // insertion counter, breaks ties
};

/// Tournament of min(tournament_size, |population|) distinct entries drawn
/// uniformly; the lowest criterion wins, ties to the earliest insertion.
/// Returns the winner's index. Throws std::invalid_argument when empty.
std::size_t sample_and_select(const std::vector<PopulationEntry>& population,
                              const SearchConfig& cfg, std::mt19937_64& rng);

struct Score {
  double loss = 0;
  Metrics metrics{};
};

using Scorer = std::function<Score(const DesignPoint&)>;

/// Hardware metrics of one point: map, cost and pipeline simulation.
Metrics hardware_metrics(const DesignPoint& point, const TechParams& tp, double lookup_time,
                         bool overlap = true);

/// Loss from `evaluator`, metrics from hardware_metrics.
Scorer make_scorer(const Evaluator& evaluator, const TechParams& tp, double lookup_time,
                   bool overlap = true);

struct GenerationLog {
  int generation = 0;
  double best = 0;    // best criterion in the population after truncation
  double median = 0;
  std::string parent_id;
  std::vector<std::string> child_ids;
  int skipped = 0;
};

struct SearchLog {
  Metrics targets{};
  double initial_best = 0;
  double initial_median = 0;
  std::vector<GenerationLog> generations;
};

struct SearchResult {
  std::vector<PopulationEntry> population;  // sorted, best first
  std::vector<PopulationEntry> top;         // first top_k entries
  SearchLog log;
};

/// Called after each generation with the current state, e.g. to flush
/// partial results.
using GenerationHook = std::function<void(const SearchResult&)>;

SearchResult run_search(const SearchConfig& cfg, const SpaceDescriptor& space,
                        const Scorer& scorer, const GenerationHook& hook = {});

nlohmann::json to_json(const PopulationEntry& e);
nlohmann::json to_json(const SearchLog& log);
/// generation,best,median; generation 0 is the initial population.
std::string criterion_csv(const SearchLog& log);

}  // namespace pimdse
