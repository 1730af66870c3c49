// SPDX-License-Identifier: Apache-2.0
//
// pimdse: sample and count the design space, map and simulate single
// points, run the evolutionary search.
//
// Exit codes: 0 ok, 2 parse error, 3 validation error, 4 internal error.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pimdse/cost_model.hpp"
#include "pimdse/design_space.hpp"
#include "pimdse/errors.hpp"
#include "pimdse/evaluator.hpp"
#include "pimdse/hashing.hpp"
#include "pimdse/log.hpp"
#include "pimdse/mapping.hpp"
#include "pimdse/pipeline.hpp"
#include "pimdse/search.hpp"

#ifndef PIMDSE_VERSION
#define PIMDSE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pimdse;

namespace {

enum Exit { kOk = 0, kParse = 2, kValidation = 3, kInternal = 4 };

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Options {
  std::string space_path;
  std::string tech_path;
  std::string point_path;
  std::string search_path;
  std::string trace_path;
  std::string external_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int count = 1;
  int workers = 1;
  bool workers_given = false;
  bool no_overlap = false;
};

SpaceDescriptor load_space(const Options& o) {
  if (o.space_path.empty()) return default_space();
  SpaceDescriptor s = space_from_json(read_json(o.space_path));
  check_space(s);
  return s;
}

TechParams load_tech(const Options& o) {
  if (o.tech_path.empty()) return default_tech();
  return tech_from_json(read_json(o.tech_path));
}

DesignPoint load_point(const Options& o) {
  if (o.point_path.empty()) throw ParseError("--point is required");
  DesignPoint p = design_point_from_json(read_json(o.point_path));
  SpaceDescriptor space = load_space(o);
  const ValidationReport rep = validate(p, space);
  if (!rep.ok) {
    std::string msg = "invalid design point:";
    for (const auto& v : rep.violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  return p;
}

double lookup_time(const Options& o, const ModelConfig& model, const TechParams& tp) {
  if (!o.trace_path.empty()) return mean_lookup_latency(load_trace(o.trace_path), tp);
  return default_lookup_latency(model, tp, o.seed);
}

int cmd_space_count(const Options& o) {
  const SpaceDescriptor space = load_space(o);
  const Cardinality c = cardinality(space);
  const std::string digits = c.count.str();
  // log10 from the leading digits; exact enough for a diagnostic.
  const double lead = std::stod("0." + digits.substr(0, 17));
  const double log10 = std::log10(lead) + static_cast<double>(digits.size());
  const double reference_log10 = std::log10(2.0) + 54;
  json out = {{"cardinality", digits},
              {"decimal_digits", digits.size()},
              {"log10", log10},
              {"convention", c.convention},
              {"reference", "2e54"},
              {"log10_over_reference", log10 - reference_log10}};
  std::cout << dump(out);
  return kOk;
}

int cmd_space_sample(const Options& o) {
  const SpaceDescriptor space = load_space(o);
  for (int i = 0; i < o.count; ++i) {
    const DesignPoint p = sample_random(derive_seed(o.seed, static_cast<std::uint64_t>(i)), space);
    std::cout << to_json(p).dump() << "\n";
  }
  return kOk;
}

int cmd_map(const Options& o) {
  const DesignPoint p = load_point(o);
  std::cout << dump(to_json(map_model(p)));
  return kOk;
}

int cmd_simulate(const Options& o) {
  const DesignPoint p = load_point(o);
  const TechParams tp = load_tech(o);
  const MappedModel mm = map_model(p);
  const double lookup = lookup_time(o, p.model, tp);
  const CostReport cost = model_cost(mm, tp);
  const ThroughputReport thr = simulate(mm, tp, lookup, !o.no_overlap);
  json out = {{"point_id", p.point_id},
              {"overlap", !o.no_overlap},
              {"lookup_latency", lookup},
              {"tile_plan",
               {{"memory", mm.tile_plan.memory},
                {"mvm", mm.tile_plan.mvm},
                {"dp", mm.tile_plan.dp},
                {"fm", mm.tile_plan.fm}}},
              {"cost", to_json(cost)},
              {"throughput", to_json(thr)}};
  std::cout << dump(out);
  return kOk;
}

int cmd_search(const Options& o, const std::vector<std::string>& argv) {
  const auto started = std::chrono::steady_clock::now();
  SearchConfig cfg;
  if (!o.search_path.empty()) cfg = search_config_from_json(read_json(o.search_path));
  if (o.seed_given) cfg.seed = o.seed;
  if (o.workers_given) cfg.workers = o.workers;
  if (o.no_overlap) cfg.overlap = false;
  check_config(cfg);
  const SpaceDescriptor space = load_space(o);
  const TechParams tp = load_tech(o);
  if (o.out_dir.empty()) throw ParseError("--out is required");

  ExternalLosses external;
  if (!o.external_path.empty()) external = ingest_external(o.external_path);
  const Evaluator evaluator(cfg.surrogate, std::move(external));
  ModelConfig shape;
  shape.num_sparse_features = space.num_sparse_features;
  shape.embedding_dim = space.embedding_dim;
  shape.embedding_rows = space.embedding_rows;
  const double lookup = lookup_time(o, shape, tp);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::string command;
  for (const auto& a : argv) command += (command.empty() ? "" : " ") + a;
  json manifest = {{"command", command},
                   {"tool_version", PIMDSE_VERSION},
                   {"seed", cfg.seed},
                   {"space", o.space_path.empty() ? json("<default>") : json(o.space_path)},
                   {"tech", o.tech_path.empty() ? json("<default>") : json(o.tech_path)},
                   {"search_config",
                    o.search_path.empty() ? json("<default>") : json(o.search_path)},
                   {"trace", o.trace_path.empty() ? json("<synthetic zipf>") : json(o.trace_path)},
                   {"external_losses",
                    o.external_path.empty() ? json(nullptr) : json(o.external_path)},
                   {"output_dir", dir.string()},
                   {"resolved_config", to_json(cfg)},
                   {"lookup_latency", lookup},
                   {"status", "running"}};
  write_file(dir / "manifest.json", dump(manifest));

  auto flush = [&](const SearchResult& r) {
    json top = json::array();
    for (const PopulationEntry& e : r.top) top.push_back(to_json(e));
    write_file(dir / "top15.json", dump({{"manifest", "manifest.json"}, {"entries", top}}));
    write_file(dir / "search_log.json",
               dump({{"manifest", "manifest.json"}, {"log", to_json(r.log)}}));
    write_file(dir / "criterion.csv", criterion_csv(r.log));
  };
  const SearchResult res = run_search(cfg, space, make_scorer(evaluator, tp, lookup, cfg.overlap),
                                      flush);
  flush(res);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest["status"] = "complete";
  manifest["wall_time_seconds"] = secs;
  write_file(dir / "manifest.json", dump(manifest));
  log::info("search finished in ", secs, " s; best criterion ", res.top.front().criterion);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-space exploration for ReRAM recommender accelerators", "pimdse"};
  app.set_version_flag("--version", PIMDSE_VERSION);
  app.require_subcommand(1);
  Options o;

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { o.seed = s; o.seed_given = true; }, "Random seed");
  };

  auto* space = app.add_subcommand("space", "Count or sample the design space");
  space->require_subcommand(1);
  auto* count = space->add_subcommand("count", "Print the exact number of design points");
  count->add_option("--space", o.space_path, "Space descriptor JSON")->check(CLI::ExistingFile);
  auto* sample = space->add_subcommand("sample", "Print random design points, one JSON per line");
  sample->add_option("--space", o.space_path, "Space descriptor JSON")->check(CLI::ExistingFile);
  seed_opt(sample);
  sample->add_option("-n", o.count, "Number of points")->check(CLI::PositiveNumber);

  auto* map = app.add_subcommand("map", "Map a design point onto tiles and engines");
  map->add_option("--point", o.point_path, "Design point JSON")->required()->check(CLI::ExistingFile);
  map->add_option("--space", o.space_path, "Space descriptor JSON")->check(CLI::ExistingFile);

  auto* sim = app.add_subcommand("simulate", "Cost model and pipeline simulation of one point");
  sim->add_option("--point", o.point_path, "Design point JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--tech", o.tech_path, "Technology parameters JSON")->check(CLI::ExistingFile);
  sim->add_option("--space", o.space_path, "Space descriptor JSON")->check(CLI::ExistingFile);
  sim->add_option("--trace", o.trace_path, "Lookup trace, one query per line")
      ->check(CLI::ExistingFile);
  sim->add_flag("--no-overlap", o.no_overlap, "Disable programming/production overlap");
  seed_opt(sim);

  auto* search = app.add_subcommand("search", "Run the evolutionary search");
  search->add_option("--search-config", o.search_path, "Search configuration JSON")
      ->check(CLI::ExistingFile);
  search->add_option("--space", o.space_path, "Space descriptor JSON")->check(CLI::ExistingFile);
  search->add_option("--tech", o.tech_path, "Technology parameters JSON")->check(CLI::ExistingFile);
  search->add_option("--trace", o.trace_path, "Lookup trace, one query per line")
      ->check(CLI::ExistingFile);
  search->add_option("--external-losses", o.external_path, "CSV point_id,log_loss[,auc]")
      ->check(CLI::ExistingFile);
  search->add_option_function<int>(
      "--workers", [&](int w) { o.workers = w; o.workers_given = true; },
      "Parallel evaluations per generation")->check(CLI::PositiveNumber);
  search->add_option("--out", o.out_dir, "Output directory")->required();
  search->add_flag("--no-overlap", o.no_overlap, "Disable programming/production overlap");
  seed_opt(search);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    if (count->parsed()) return cmd_space_count(o);
    if (sample->parsed()) return cmd_space_sample(o);
    if (map->parsed()) return cmd_map(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (search->parsed()) return cmd_search(o, std::vector<std::string>(argv, argv + argc));
  } catch (const ParseError& e) {
    std::cerr << "pimdse: parse error: " << e.what() << "\n";
    return kParse;
  } catch (const json::exception& e) {
    std::cerr << "pimdse: parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ValidationError& e) {
    std::cerr << "pimdse: validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "pimdse: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
