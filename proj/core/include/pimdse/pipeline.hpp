// SPDX-License-Identifier: Apache-2.0
//
// Stage-level pipeline simulation: embedding bank placement and conflicts,
// DAG scheduling of operator stages, single-query latency and steady-state
// throughput.
#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pimdse/cost_model.hpp"
#include "pimdse/mapping.hpp"

namespace pimdse {

using EmbeddingId = std::int64_t;
using Trace = std::vector<std::vector<EmbeddingId>>;

struct EmbeddingPlacement {
  std::map<EmbeddingId, int> bank_of;
  std::map<EmbeddingId, std::int64_t> frequency;
  int num_banks = 1;

  std::vector<std::int64_t> loads() const;  // ids per bank
};

/// Ids sorted by descending frequency (ties by ascending id) and assigned to
/// bank rank mod num_banks. Throws std::invalid_argument when num_banks < 1.
EmbeddingPlacement place_embeddings(const std::map<EmbeddingId, std::int64_t>& freqs,
                                    int num_banks);

/// Per query: t_bank times the largest number of the query's ids that share
/// one bank. Throws UnplacedId.
std::vector<double> simulate_lookup(const Trace& trace, const EmbeddingPlacement& placement,
                                    double t_bank);

std::map<EmbeddingId, std::int64_t> frequencies(const Trace& trace);

/// One query per line, comma-separated integer ids; blank lines are empty
/// queries. Throws ParseError with the offending line.
Trace parse_trace(std::istream& in);
Trace load_trace(const std::string& path);

/// Each query draws one row per table (table t owns ids t * rows .. t *
/// rows + rows - 1) from a Zipf(alpha) distribution over rows.
Trace zipf_trace(int num_queries, int num_tables, int rows_per_table, double alpha,
                 std::uint64_t seed);

/// Mean per-query lookup latency of a trace under frequency placement.
double mean_lookup_latency(const Trace& trace, const TechParams& tp);

/// Synthetic default: 256 queries of a Zipf(1.05) trace over the model's
/// tables.
double default_lookup_latency(const ModelConfig& model, const TechParams& tp,
                              std::uint64_t seed = 0);

struct StageEvent {
  std::string name;
  double start = 0;
  double end = 0;
};

struct Stage {
  std::string id;
  std::string kind;  // lookup, input, compute, output
  double start = 0;
  double end = 0;
  std::vector<std::string> deps;
  std::vector<StageEvent> events;  // produce / program phases of DP and FM

  double duration() const { return end - start; }
};

struct Schedule {
  std::vector<Stage> stages;  // topological order
  std::vector<std::pair<std::string, std::string>> overlap_edges;
  double makespan = 0;

  const Stage& at(const std::string& id) const;
};

/// Every stage starts when its last DAG predecessor ends.
Schedule schedule(const MappedModel& mm, const TechParams& tp, double lookup_time = 0.0,
                  bool overlap = true);

struct ThroughputReport {
  double latency = 0;          // single query
  double throughput = 0;       // 1 / bottleneck_time
  double bottleneck_time = 0;
  std::string bottleneck_stage;
  std::string compute_bottleneck;  // argmax over operator stages only
  double serial_latency = 0;       // sum of all stage durations
  std::map<std::string, double> utilization;  // stage time / bottleneck time
  Schedule timeline;
};

ThroughputReport simulate(const MappedModel& mm, const TechParams& tp, double lookup_time,
                          bool overlap = true);

nlohmann::json to_json(const Schedule& s);
nlohmann::json to_json(const ThroughputReport& r);

}  // namespace pimdse
