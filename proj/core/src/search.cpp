// SPDX-License-Identifier: Apache-2.0
#include "pimdse/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"
#include "pimdse/log.hpp"
#include "pimdse/mapping.hpp"
#include "pimdse/pipeline.hpp"

namespace pimdse {
namespace {

using nlohmann::json;

enum SeedStream : std::uint64_t { kInit = 1, kSelect = 2, kMutate = 3 };

struct Outcome {
  std::optional<Score> score;
  std::string error;
};

// Scores every point; results land in input order whatever the completion
// order.
std::vector<Outcome> score_all(const std::vector<DesignPoint>& points, const Scorer& scorer,
                               int workers) {
  std::vector<Outcome> out(points.size());
  auto run = [&](std::size_t i) {
    try {
      out[i].score = scorer(points[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), points.size());
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < points.size(); i = next++) run(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool better(const PopulationEntry& a, const PopulationEntry& b) {
  if (a.criterion != b.criterion) return a.criterion < b.criterion;
  return a.order < b.order;
}

Metrics metrics_from(const json& v, const char* key) {
  if (!v.is_array() || v.size() != 3) {
    throw ParseError(std::string("search.") + key + ": expected an array of 3 numbers");
  }
  Metrics m{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) throw ParseError(std::string("search.") + key + ": expected numbers");
    m[i] = v[i].get<double>();
  }
  return m;
}

}  // namespace

void check_config(const SearchConfig& cfg) {
  if (cfg.num_generations < 1 || cfg.num_children < 1 || cfg.num_mutations < 1 ||
      cfg.population_init_size < 1 || cfg.tournament_size < 1 || cfg.workers < 1 ||
      cfg.top_k < 1 || cfg.max_skipped < 0) {
    throw ValidationError("search: counts must be >= 1");
  }
  for (double l : cfg.lambda) {
    if (!(l >= 0) || !std::isfinite(l)) throw ValidationError("search: lambda must be >= 0");
  }
  if (cfg.targets) {
    for (double t : *cfg.targets) {
      if (!(t > 0) || !std::isfinite(t)) throw ValidationError("search: targets must be > 0");
    }
  }
}

json to_json(const SearchConfig& cfg) {
  json j = {{"num_generations", cfg.num_generations},
            {"num_children", cfg.num_children},
            {"num_mutations", cfg.num_mutations},
            {"lambda", cfg.lambda},
            {"population_init_size", cfg.population_init_size},
            {"tournament_size", cfg.tournament_size},
            {"seed", cfg.seed},
            {"workers", cfg.workers},
            {"max_skipped", cfg.max_skipped},
            {"top_k", cfg.top_k},
            {"overlap", cfg.overlap},
            {"surrogate", to_json(cfg.surrogate)}};
  j["targets"] = cfg.targets ? json(*cfg.targets) : json(nullptr);
  return j;
}

SearchConfig search_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("search: expected an object");
  SearchConfig cfg;
  for (const auto& [k, v] : doc.items()) {
    auto integer = [&]() {
      if (!v.is_number_integer()) throw ParseError("search." + k + ": expected an integer");
      return v.get<long long>();
    };
    if (k == "num_generations") cfg.num_generations = static_cast<int>(integer());
    else if (k == "num_children") cfg.num_children = static_cast<int>(integer());
    else if (k == "num_mutations") cfg.num_mutations = static_cast<int>(integer());
    else if (k == "population_init_size") cfg.population_init_size = static_cast<int>(integer());
    else if (k == "tournament_size") cfg.tournament_size = static_cast<int>(integer());
    else if (k == "workers") cfg.workers = static_cast<int>(integer());
    else if (k == "max_skipped") cfg.max_skipped = static_cast<int>(integer());
    else if (k == "top_k") cfg.top_k = static_cast<int>(integer());
    else if (k == "seed") {
      if (!v.is_number_unsigned()) throw ParseError("search.seed: expected a nonnegative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else if (k == "lambda") cfg.lambda = metrics_from(v, "lambda");
    else if (k == "targets") {
      if (!v.is_null()) cfg.targets = metrics_from(v, "targets");
    } else if (k == "overlap") {
      if (!v.is_boolean()) throw ParseError("search.overlap: expected a boolean");
      cfg.overlap = v.get<bool>();
    } else if (k == "surrogate") cfg.surrogate = surrogate_from_json(v);
    else throw ParseError("search: unknown key '" + k + "'");
  }
  check_config(cfg);
  return cfg;
}

double criterion(double loss, const Metrics& m, const Metrics& lambda, const Metrics& targets) {
  double c = loss;
  for (std::size_t i = 0; i < 3; ++i) c += lambda[i] * m[i] / targets[i];
  return c;
}

std::size_t sample_and_select(const std::vector<PopulationEntry>& pop, const SearchConfig& cfg,
                              std::mt19937_64& rng) {
  if (pop.empty()) throw std::invalid_argument("sample_and_select: empty population");
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.tournament_size),
                                              pop.size());
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(pop.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::size_t best = pop.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
    std::swap(idx[i], idx[d(rng)]);
    const std::size_t cand = idx[i];
    if (best == pop.size() || better(pop[cand], pop[best])) best = cand;
  }
  return best;
}

Metrics hardware_metrics(const DesignPoint& point, const TechParams& tp, double lookup_time,
                         bool overlap) {
  const MappedModel mm = map_model(point);
  const CostReport cost = model_cost(mm, tp);
  const ThroughputReport thr = simulate(mm, tp, lookup_time, overlap);
  return {thr.bottleneck_time, cost.area, cost.peak_power};
}

Scorer make_scorer(const Evaluator& evaluator, const TechParams& tp, double lookup_time,
                   bool overlap) {
  return [evaluator, tp, lookup_time, overlap](const DesignPoint& p) {
    Score s;
    s.loss = evaluator.evaluate(p).log_loss;
    s.metrics = hardware_metrics(p, tp, lookup_time, overlap);
    return s;
  };
}

SearchResult run_search(const SearchConfig& cfg, const SpaceDescriptor& space,
                        const Scorer& scorer, const GenerationHook& hook) {
  check_config(cfg);
  check_space(space);
  SearchResult res;
  int skipped = 0;
  auto skip = [&](const DesignPoint& p, const std::string& why) {
    log::warn("skipping candidate ", p.point_id.substr(0, 12), ": ", why);
    if (++skipped > cfg.max_skipped) {
      throw Error("search aborted after " + std::to_string(skipped) + " failed evaluations");
    }
  };

  // Initial population; failed samples are replaced by further draws.
  std::vector<DesignPoint> init_points;
  std::vector<Score> init_scores;
  std::uint64_t draw = 0;
  while (static_cast<int>(init_points.size()) < cfg.population_init_size) {
    std::vector<DesignPoint> batch;
    const int need = cfg.population_init_size - static_cast<int>(init_points.size());
    for (int i = 0; i < need; ++i) {
      batch.push_back(sample_random(derive_seed(cfg.seed, kInit, draw++), space));
    }
    const auto outcomes = score_all(batch, scorer, cfg.workers);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!outcomes[i].score) {
        skip(batch[i], outcomes[i].error);
        continue;
      }
      init_points.push_back(std::move(batch[i]));
      init_scores.push_back(*outcomes[i].score);
    }
  }

  Metrics targets{};
  if (cfg.targets) {
    targets = *cfg.targets;
  } else {
    for (std::size_t m = 0; m < 3; ++m) {
      std::vector<double> col;
      for (const Score& s : init_scores) col.push_back(s.metrics[m]);
      targets[m] = median_of(col);
      if (!(targets[m] > 0)) targets[m] = 1.0;
    }
  }
  res.log.targets = targets;

  std::uint64_t order = 0;
  auto make_entry = [&](DesignPoint p, const Score& s) {
    PopulationEntry e;
    e.point = std::move(p);
    e.loss = s.loss;
    e.metrics = s.metrics;
    e.criterion = criterion(s.loss, s.metrics, cfg.lambda, targets);
    e.order = order++;
    return e;
  };
  auto& pop = res.population;
  for (std::size_t i = 0; i < init_points.size(); ++i) {
    pop.push_back(make_entry(std::move(init_points[i]), init_scores[i]));
  }
  std::stable_sort(pop.begin(), pop.end(), better);
  auto median_criterion = [&] {
    std::vector<double> c;
    for (const auto& e : pop) c.push_back(e.criterion);
    return median_of(c);
  };
  res.log.initial_best = pop.front().criterion;
  res.log.initial_median = median_criterion();

  for (int g = 1; g <= cfg.num_generations; ++g) {
    std::mt19937_64 rng(derive_seed(cfg.seed, kSelect, static_cast<std::uint64_t>(g)));
    const PopulationEntry parent = pop[sample_and_select(pop, cfg, rng)];

    std::vector<DesignPoint> children;
    for (int c = 0; c < cfg.num_children; ++c) {
      children.push_back(mutate(parent.point,
                                derive_seed(cfg.seed, kMutate, static_cast<std::uint64_t>(g),
                                            static_cast<std::uint64_t>(c)),
                                cfg.num_mutations, space));
    }
    const auto outcomes = score_all(children, scorer, cfg.workers);

    GenerationLog gl;
    gl.generation = g;
    gl.parent_id = parent.point.point_id;
    std::size_t added = 0;
    for (std::size_t c = 0; c < children.size(); ++c) {
      if (!outcomes[c].score) {
        skip(children[c], outcomes[c].error);
        ++gl.skipped;
        continue;
      }
      gl.child_ids.push_back(children[c].point_id);
      pop.push_back(make_entry(std::move(children[c]), *outcomes[c].score));
      ++added;
    }
    std::stable_sort(pop.begin(), pop.end(), better);
    pop.resize(pop.size() - added);

    gl.best = pop.front().criterion;
    gl.median = median_criterion();
    res.log.generations.push_back(std::move(gl));
    if (hook) {
      const std::size_t k = std::min<std::size_t>(cfg.top_k, pop.size());
      res.top.assign(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(k));
      hook(res);
    }
  }

  const std::size_t k = std::min<std::size_t>(cfg.top_k, pop.size());
  res.top.assign(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(k));
  return res;
}

json to_json(const PopulationEntry& e) {
  json metrics = json::object();
  for (std::size_t i = 0; i < 3; ++i) metrics[kMetricNames[i]] = e.metrics[i];
  return {{"point_id", e.point.point_id},
          {"point", to_json(e.point)},
          {"loss", e.loss},
          {"metrics", std::move(metrics)},
          {"criterion", e.criterion}};
}

json to_json(const SearchLog& log) {
  json gens = json::array();
  for (const GenerationLog& g : log.generations) {
    gens.push_back({{"generation", g.generation},
                    {"best", g.best},
                    {"median", g.median},
                    {"parent_id", g.parent_id},
                    {"child_ids", g.child_ids},
                    {"skipped", g.skipped}});
  }
  json targets = json::object();
  for (std::size_t i = 0; i < 3; ++i) targets[kMetricNames[i]] = log.targets[i];
  return {{"targets", std::move(targets)},
          {"initial", {{"best", log.initial_best}, {"median", log.initial_median}}},
          {"generations", std::move(gens)}};
}

std::string criterion_csv(const SearchLog& log) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "generation,best,median\n";
  os << 0 << ',' << log.initial_best << ',' << log.initial_median << '\n';
  for (const GenerationLog& g : log.generations) {
    os << g.generation << ',' << g.best << ',' << g.median << '\n';
  }
  return os.str();
}

}  // namespace pimdse
