// SPDX-License-Identifier: Apache-2.0
#include "pimdse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pimdse/errors.hpp"

namespace pimdse {

std::vector<std::int64_t> EmbeddingPlacement::loads() const {
  std::vector<std::int64_t> out(num_banks, 0);
  for (const auto& [_, bank] : bank_of) ++out[bank];
  return out;
}

EmbeddingPlacement place_embeddings(const std::map<EmbeddingId, std::int64_t>& freqs,
                                    int num_banks) {
  if (num_banks < 1) throw std::invalid_argument("place_embeddings: num_banks must be >= 1");
  std::vector<std::pair<EmbeddingId, std::int64_t>> order(freqs.begin(), freqs.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  EmbeddingPlacement p;
  p.num_banks = num_banks;
  p.frequency = freqs;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    p.bank_of[order[rank].first] = static_cast<int>(rank % num_banks);
  }
  return p;
}

std::vector<double> simulate_lookup(const Trace& trace, const EmbeddingPlacement& placement,
                                    double t_bank) {
  std::vector<double> out;
  out.reserve(trace.size());
  std::vector<int> count(placement.num_banks);
  for (const auto& query : trace) {
    std::fill(count.begin(), count.end(), 0);
    int worst = 0;
    for (EmbeddingId id : query) {
      auto it = placement.bank_of.find(id);
      if (it == placement.bank_of.end()) {
        throw UnplacedId("embedding id " + std::to_string(id) + " has no bank");
      }
      worst = std::max(worst, ++count[it->second]);
    }
    out.push_back(t_bank * worst);
  }
  return out;
}

std::map<EmbeddingId, std::int64_t> frequencies(const Trace& trace) {
  std::map<EmbeddingId, std::int64_t> f;
  for (const auto& q : trace)
    for (EmbeddingId id : q) ++f[id];
  return f;
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<EmbeddingId> query;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const auto b = tok.find_first_not_of(" \t");
      const auto e = tok.find_last_not_of(" \t");
      if (b == std::string::npos) throw ParseError("empty id", lineno);
      tok = tok.substr(b, e - b + 1);
      std::size_t used = 0;
      EmbeddingId id = 0;
      try {
        id = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw ParseError("bad id '" + tok + "'", lineno);
      query.push_back(id);
    }
    trace.push_back(std::move(query));
  }
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file " + path);
  return parse_trace(in);
}

Trace zipf_trace(int num_queries, int num_tables, int rows_per_table, double alpha,
                 std::uint64_t seed) {
  if (num_queries < 0 || num_tables < 1 || rows_per_table < 1) {
    throw std::invalid_argument("zipf_trace: bad shape");
  }
  std::vector<double> w(rows_per_table);
  for (int r = 0; r < rows_per_table; ++r) w[r] = 1.0 / std::pow(r + 1.0, alpha);
  std::discrete_distribution<int> zipf(w.begin(), w.end());
  std::mt19937_64 rng(seed);
  Trace t(num_queries);
  for (auto& q : t) {
    q.reserve(num_tables);
    for (int table = 0; table < num_tables; ++table) {
      q.push_back(static_cast<EmbeddingId>(table) * rows_per_table + zipf(rng));
    }
  }
  return t;
}

double mean_lookup_latency(const Trace& trace, const TechParams& tp) {
  if (trace.empty()) return 0.0;
  const auto placement = place_embeddings(frequencies(trace), tp.num_banks);
  const auto lat = simulate_lookup(trace, placement, tp.t_bank);
  double s = 0;
  for (double v : lat) s += v;
  return s / static_cast<double>(lat.size());
}

double default_lookup_latency(const ModelConfig& model, const TechParams& tp,
                              std::uint64_t seed) {
  return mean_lookup_latency(
      zipf_trace(256, model.num_sparse_features, model.embedding_rows, 1.05, seed), tp);
}

const Stage& Schedule::at(const std::string& id) const {
  for (const Stage& s : stages)
    if (s.id == id) return s;
  throw std::out_of_range("schedule has no stage " + id);
}

Schedule schedule(const MappedModel& mm, const TechParams& tp, double lookup_time,
                  bool overlap) {
  std::map<std::string, const MappedOperator*> ops;
  for (const MappedOperator* op : mm.operators()) ops[op->id] = op;
  std::map<std::string, std::vector<std::string>> deps;
  for (const auto& [src, dst] : mm.topology.edges) {
    auto& d = deps[dst];
    if (std::find(d.begin(), d.end(), src) == d.end()) d.push_back(src);
  }

  Schedule s;
  std::map<std::string, double> end_of;
  for (const std::string& id : mm.topology.nodes) {
    Stage st;
    st.id = id;
    st.deps = deps[id];
    for (const std::string& d : st.deps) st.start = std::max(st.start, end_of.at(d));
    double dur = 0;
    if (id == "stem.lookup") {
      st.kind = "lookup";
      dur = lookup_time;
    } else if (id == "stem.dense") {
      st.kind = "input";
    } else {
      st.kind = "compute";
      const MappedOperator& op = *ops.at(id);
      const OpTiming t = op_timing(op, tp, mm.reram, mm.a_bits);
      dur = op_stage_time(op, tp, mm.reram, mm.a_bits, overlap);
      if (t.vectors > 0) {
        double ready = 0;
        if (overlap) {
          const double t_e = t.produce / t.vectors;
          ready = overlapped_ready_time(t.vectors, t_e, tp.xbar_write_time);
          if (t.produce > 0) st.events.push_back({"produce", st.start, st.start + t.produce});
          st.events.push_back({"program", st.start + t_e, st.start + ready});
          s.overlap_edges.emplace_back(id + ".produce", id + ".program");
        } else {
          ready = t.produce + t.program;
          if (t.produce > 0) st.events.push_back({"produce", st.start, st.start + t.produce});
          st.events.push_back({"program", st.start + t.produce, st.start + ready});
        }
        st.events.push_back({"compute", st.start + ready, st.start + ready + t.compute});
        st.events.push_back({"tail", st.start + ready + t.compute, st.start + dur});
      }
    }
    st.end = st.start + dur;
    end_of[id] = st.end;
    s.stages.push_back(std::move(st));
  }

  Stage out;
  out.id = "output";
  out.kind = "output";
  out.deps = {mm.final_fc.id};
  out.start = end_of.at(mm.final_fc.id);
  out.end = out.start + tp.activation_time;
  s.makespan = out.end;
  s.stages.push_back(std::move(out));
  return s;
}

ThroughputReport simulate(const MappedModel& mm, const TechParams& tp, double lookup_time,
                          bool overlap) {
  ThroughputReport r;
  r.timeline = schedule(mm, tp, lookup_time, overlap);
  r.latency = r.timeline.makespan;
  double worst_compute = -1;
  for (const Stage& st : r.timeline.stages) {
    const double d = st.duration();
    r.serial_latency += d;
    if (st.kind == "input") continue;
    if (d > r.bottleneck_time || r.bottleneck_stage.empty()) {
      r.bottleneck_time = d;
      r.bottleneck_stage = st.id;
    }
    if (st.kind == "compute" && d > worst_compute) {
      worst_compute = d;
      r.compute_bottleneck = st.id;
    }
  }
  r.throughput = r.bottleneck_time > 0 ? 1.0 / r.bottleneck_time : 0.0;
  for (const Stage& st : r.timeline.stages) {
    if (st.kind == "input") continue;
    r.utilization[st.id] = r.bottleneck_time > 0 ? st.duration() / r.bottleneck_time : 0.0;
  }
  return r;
}

nlohmann::json to_json(const Schedule& s) {
  nlohmann::json stages = nlohmann::json::array();
  for (const Stage& st : s.stages) {
    nlohmann::json events = nlohmann::json::array();
    for (const StageEvent& e : st.events) {
      events.push_back({{"name", e.name}, {"start", e.start}, {"end", e.end}});
    }
    stages.push_back({{"id", st.id},
                      {"kind", st.kind},
                      {"start", st.start},
                      {"end", st.end},
                      {"deps", st.deps},
                      {"events", std::move(events)}});
  }
  nlohmann::json overlap = nlohmann::json::array();
  for (const auto& [a, b] : s.overlap_edges) overlap.push_back({a, b});
  return {{"stages", std::move(stages)}, {"overlap_edges", std::move(overlap)},
          {"makespan", s.makespan}};
}

nlohmann::json to_json(const ThroughputReport& r) {
  return {{"latency", r.latency},
          {"throughput", r.throughput},
          {"bottleneck_time", r.bottleneck_time},
          {"bottleneck_stage", r.bottleneck_stage},
          {"compute_bottleneck", r.compute_bottleneck},
          {"serial_latency", r.serial_latency},
          {"utilization", r.utilization},
          {"timeline", to_json(r.timeline)}};
}

}  // namespace pimdse
