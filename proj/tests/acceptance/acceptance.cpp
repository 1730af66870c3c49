// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks 1-9. One PASS/FAIL line per check; exit status is the
// number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "pimdse/cost_model.hpp"
#include "pimdse/crossbar.hpp"
#include "pimdse/functional.hpp"
#include "pimdse/hashing.hpp"
#include "pimdse/mapping.hpp"
#include "pimdse/pipeline.hpp"
#include "pimdse/search.hpp"
#include "reference.hpp"

using namespace pimdse;
using namespace pimdse::crossbar;
using pimdse::testing::lossless_adc;
using pimdse::testing::random_matrix;
using pimdse::testing::random_vector;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

ReRAMConfig lossless(int dac, int cell, int xbar) {
  return {dac, cell, xbar, lossless_adc(dac, cell, xbar)};
}

std::vector<std::vector<std::int64_t>> random_rows(int n, int width, std::int64_t lo,
                                                   std::int64_t hi, std::mt19937_64& rng) {
  std::vector<std::vector<std::int64_t>> out;
  for (int i = 0; i < n; ++i) out.push_back(random_vector(width, lo, hi, rng));
  return out;
}

std::vector<std::int64_t> exact_matmul(const IntMatrix& m, const std::vector<std::int64_t>& x) {
  std::vector<std::int64_t> y(static_cast<std::size_t>(m.cols), 0);
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) y[static_cast<std::size_t>(c)] += x[static_cast<std::size_t>(r)] * m(r, c);
  return y;
}

Outcome fm_equivalence() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n(2, 8), w(1, 16), bit(1, 2), xb(0, 2);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000 && o.ok; ++i) {
    const auto x = random_rows(n(rng), w(rng), -8, 7, rng);
    const FmEngineResult r = fm_engine(x, lossless(bit(rng), bit(rng), 16 << xb(rng)));
    if (r.ix != testing::ref_fm_squares(x)) o.fail("case " + std::to_string(i) + " != squares oracle");
    if (r.ix != testing::ref_fm_pairwise(x)) o.fail("case " + std::to_string(i) + " != pairwise oracle");
    if (!r.log.clean()) o.fail("case " + std::to_string(i) + " clipped");
  }
  const double s = seconds_since(t0);
  if (s >= 5) o.fail("took " + std::to_string(s) + " s");
  if (o.ok) o.detail = "1000 cases in " + std::to_string(s) + " s";
  return o;
}

Outcome dp_equivalence() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> n(2, 9), w(1, 64), bit(1, 2), xb(0, 2);
  const auto t0 = Clock::now();
  for (int i = 0; i < 1000 && o.ok; ++i) {
    const auto x = random_rows(n(rng), w(rng), -127, 127, rng);
    const DpEngineResult r = dp_engine(x, lossless(bit(rng), bit(rng), 16 << xb(rng)));
    if (r.pairs != testing::ref_triu_gram(x)) o.fail("case " + std::to_string(i) + " != triu(XX^T)");
    if (!r.log.clean()) o.fail("case " + std::to_string(i) + " clipped");
  }
  const double s = seconds_since(t0);
  if (s >= 5) o.fail("took " + std::to_string(s) + " s");
  if (o.ok) o.detail = "1000 cases in " + std::to_string(s) + " s";
  return o;
}

Outcome crossbar_lossless() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> dim(1, 80), wb(2, 8), ab(2, 8), bit(1, 2), xb(0, 2);
  for (int i = 0; i < 10000 && o.ok; ++i) {
    const int rows = dim(rng), cols = dim(rng), w_bits = wb(rng), a_bits = ab(rng);
    const int dac = bit(rng), cell = bit(rng), x = 16 << xb(rng);
    const std::int64_t wmax = (std::int64_t{1} << (w_bits - 1)) - 1;
    const std::int64_t amax = (std::int64_t{1} << (a_bits - 1)) - 1;
    const IntMatrix m = random_matrix(rows, cols, -wmax, wmax, rng);
    const auto in = random_vector(rows, -amax, amax, rng);
    const auto pm = program_signed(m, w_bits, CrossbarSpec{x, x, cell});
    const MvmResult r = mvm(pm, in, a_bits, ConverterSpec{dac, lossless_adc(dac, cell, x)});
    if (r.values != exact_matmul(m, in)) o.fail("fuzz case " + std::to_string(i) + " differs");
    if (!r.log.clean()) o.fail("fuzz case " + std::to_string(i) + " clipped");
  }
  long long exhaustive = 0;
  for (auto [dac, cell] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{1, 2}}) {
    const ConverterSpec conv{dac, lossless_adc(dac, cell, 16)};
    for (int code = 0; code < 7 * 7 * 7 * 7 && o.ok; ++code) {
      IntMatrix m(2, 2);
      int c = code;
      for (auto& v : m.data) {
        v = c % 7 - 3;
        c /= 7;
      }
      const auto pm = program_signed(m, 3, CrossbarSpec{16, 16, cell});
      for (int a = -3; a <= 3; ++a) {
        for (int b = -3; b <= 3; ++b) {
          const std::vector<std::int64_t> in{a, b};
          const MvmResult r = mvm(pm, in, 3, conv);
          ++exhaustive;
          if (r.values != exact_matmul(m, in) || !r.log.clean()) {
            o.fail("exhaustive 2x2 mismatch at code " + std::to_string(code));
          }
        }
      }
    }
  }
  if (o.ok) o.detail = "10000 fuzz + " + std::to_string(exhaustive) + " exhaustive 2x2, clip_count 0";
  return o;
}

Outcome saturation_boundary() {
  Outcome o;
  auto max_column = [](int rows) {
    ProgrammedCrossbar xb{CrossbarSpec{rows, rows, 2}, Orientation::Normal,
                          std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * rows, 3)};
    const std::vector<int> digits(static_cast<std::size_t>(rows), 3);
    return xb.column_sums(digits)[0];
  };
  const std::int64_t s16 = max_column(16), s64 = max_column(64);
  if (s16 != 144) o.fail("rows=16 max column sum " + std::to_string(s16));
  if (s64 != 576) o.fail("rows=64 max column sum " + std::to_string(s64));
  if (adc_quantize(s16, 8).clipped || adc_quantize(s16, 8).value != 144) o.fail("144 clipped at adc 8");
  if (!adc_quantize(s16, 6).clipped) o.fail("144 not clipped at adc 6");
  if (!adc_quantize(s64, 8).clipped) o.fail("576 not clipped at adc 8");

  // Same boundary through the full mvm path: all weights 3 (w 3, one
  // positive plane), all inputs 3 (a 4, one positive dac-2 slice).
  for (int rows : {16, 64}) {
    IntMatrix w(rows, 1);
    std::fill(w.data.begin(), w.data.end(), 3);
    const auto pm = program_signed(w, 3, CrossbarSpec{rows, rows, 2});
    const std::vector<std::int64_t> x(static_cast<std::size_t>(rows), 3);
    const MvmResult at8 = mvm(pm, x, 4, ConverterSpec{2, 8});
    const MvmResult at6 = mvm(pm, x, 4, ConverterSpec{2, 6});
    if (rows == 16) {
      if (at8.log.clip_count != 0 || at8.values[0] != 144) o.fail("mvm rows=16 adc 8");
      if (at6.log.clip_count == 0) o.fail("mvm rows=16 adc 6 did not clip");
    } else if (at8.log.clip_count == 0) {
      o.fail("mvm rows=64 adc 8 did not clip");
    }
  }
  if (o.ok) o.detail = "144 ok at adc 8, clips at adc 6; 576 clips at adc 8";
  return o;
}

Outcome search_semantics() {
  Outcome o;
  const SearchConfig cfg;  // shipped defaults, seed 0
  const TechParams& tp = default_tech();
  const SpaceDescriptor& space = default_space();
  ModelConfig shape;
  shape.num_sparse_features = space.num_sparse_features;
  shape.embedding_dim = space.embedding_dim;
  shape.embedding_rows = space.embedding_rows;
  const double lookup = default_lookup_latency(shape, tp, cfg.seed);
  const Scorer scorer = make_scorer(Evaluator(cfg.surrogate, {}), tp, lookup, cfg.overlap);

  bool size_ok = true;
  auto hook = [&](const SearchResult& r) {
    if (r.population.size() != static_cast<std::size_t>(cfg.population_init_size)) size_ok = false;
  };
  const auto t0 = Clock::now();
  const SearchResult a = run_search(cfg, space, scorer, hook);
  const double s = seconds_since(t0);
  const SearchResult b = run_search(cfg, space, scorer);

  if (!size_ok) o.fail("population size changed");
  const auto& g = a.log.generations;
  if (g.size() != 240) o.fail("expected 240 generations");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i].best > g[i - 1].best) o.fail("best increased at generation " + std::to_string(i + 1));
  if (to_json(a.log).dump() != to_json(b.log).dump() || criterion_csv(a.log) != criterion_csv(b.log))
    o.fail("rerun log differs");
  for (std::size_t i = 0; i < a.top.size(); ++i)
    if (to_json(a.top[i]).dump() != to_json(b.top[i]).dump()) o.fail("rerun top entries differ");
  if (!g.empty() && !(g.back().best < g.front().best)) o.fail("no strict improvement over generation 1");
  if (s >= 300) o.fail("search took " + std::to_string(s) + " s");
  if (o.ok && !g.empty()) {
    std::ostringstream d;
    d << "best " << g.front().best << " -> " << g.back().best << " in " << s << " s";
    o.detail = d.str();
  }
  return o;
}

// Brute-force event list: production j finishes at j*t_e; programming j
// starts once both production j and programming j-1 are done.
double event_list_ready(int k, double t_e, double t_p) {
  double prog_end = 0;
  for (int j = 1; j <= k; ++j) {
    const double produced = j * t_e;
    prog_end = std::max(produced, prog_end) + t_p;
  }
  return prog_end;
}

Outcome overlap_scheduling() {
  Outcome o;
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> kd(1, 64), ti(0, 50);
  std::uniform_real_distribution<double> tr(0.0, 100.0);
  for (int i = 0; i < 1000 && o.ok; ++i) {
    const int k = kd(rng);
    const bool integral = i % 2 == 0;
    const double t_e = integral ? ti(rng) : tr(rng);
    const double t_p = integral ? ti(rng) : tr(rng);
    const double got = overlapped_ready_time(k, t_e, t_p);
    const double oracle = event_list_ready(k, t_e, t_p);
    const double closed = t_e + (k - 1) * std::max(t_e, t_p) + t_p;
    const double tol = integral ? 0.0 : 1e-9 * std::max(1.0, oracle);
    if (std::abs(got - oracle) > tol) o.fail("triple " + std::to_string(i) + " != event list");
    if (std::abs(got - closed) > tol) o.fail("triple " + std::to_string(i) + " != closed form");
    if (got > k * (t_e + t_p) + tol) o.fail("triple " + std::to_string(i) + " exceeds serial");
  }
  // The scheduler's program event for DP/FM stages follows the same rule.
  const TechParams& tp = default_tech();
  int checked = 0;
  for (std::uint64_t s = 0; s < 100 && o.ok; ++s) {
    const MappedModel mm = map_model(sample_random(s));
    const Schedule sch = schedule(mm, tp, 0.0, true);
    for (const MappedOperator* op : mm.operators()) {
      if (op->engine == Engine::MVM) continue;
      const OpTiming t = op_timing(*op, tp, mm.reram, mm.a_bits);
      const Stage& st = sch.at(op->id);
      for (const StageEvent& e : st.events) {
        if (e.name != "program") continue;
        const double want = overlapped_ready_time(t.vectors, t.produce / t.vectors, tp.xbar_write_time);
        if (std::abs((e.end - st.start) - want) > 1e-9 * std::max(1.0, want))
          o.fail("schedule program event of " + op->id);
        ++checked;
      }
    }
  }
  if (o.ok) o.detail = "1000 triples, " + std::to_string(checked) + " scheduled engine stages";
  return o;
}

Outcome placement_rules() {
  Outcome o;
  std::mt19937_64 rng(707);
  std::uniform_int_distribution<int> n(0, 400), banks(1, 32), freq(0, 10000), qlen(0, 30);
  for (int i = 0; i < 1000 && o.ok; ++i) {
    std::map<EmbeddingId, std::int64_t> f;
    const int ids = n(rng);
    for (int k = 0; k < ids; ++k) f[static_cast<EmbeddingId>(rng() % 1000000)] = freq(rng);
    const int nb = banks(rng);
    const EmbeddingPlacement p = place_embeddings(f, nb);
    const auto loads = p.loads();
    if (*std::max_element(loads.begin(), loads.end()) - *std::min_element(loads.begin(), loads.end()) > 1)
      o.fail("table " + std::to_string(i) + " unbalanced");

    // Per-bank serialization oracle over random queries of placed ids.
    if (f.empty()) continue;
    std::vector<EmbeddingId> keys;
    for (const auto& [id, _] : f) keys.push_back(id);
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    Trace trace;
    for (int q = 0; q < 20; ++q) {
      std::vector<EmbeddingId> query;
      const int len = qlen(rng);
      for (int j = 0; j < len; ++j) query.push_back(keys[pick(rng)]);
      trace.push_back(query);
    }
    const double t_bank = 1.0 + static_cast<double>(i % 7);
    const auto got = simulate_lookup(trace, p, t_bank);
    for (std::size_t q = 0; q < trace.size(); ++q) {
      std::map<int, int> per_bank;
      int worst = 0;
      for (EmbeddingId id : trace[q]) worst = std::max(worst, ++per_bank[p.bank_of.at(id)]);
      if (got[q] != t_bank * worst) o.fail("table " + std::to_string(i) + " lookup latency");
    }
  }
  if (o.ok) o.detail = "1000 tables balanced, lookup latency exact";
  return o;
}

Outcome cost_invariances() {
  Outcome o;
  const TechParams& tp = default_tech();
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> cd(0.1, 10.0);
  const double k = 1 + tp.controller_overhead;
  for (std::uint64_t s = 0; s < 1000 && o.ok; ++s) {
    DesignPoint p = sample_random(derive_seed(808, s));
    const MappedModel mm = map_model(p);
    const CostReport c = model_cost(mm, tp);
    const std::string tag = "model " + std::to_string(s) + ": ";

    // Additivity.
    double area = c.area_components.at("memory"), energy = 0;
    for (const OpCost& op : c.operators) {
      area += op.area;
      energy += op.energy;
    }
    energy += c.energy_components.at("lookup") + c.energy_components.at("activation");
    if (std::abs(c.area - k * area) > 1e-9 * c.area) o.fail(tag + "area not additive");
    if (std::abs(c.energy - k * energy) > 1e-9 * c.energy) o.fail(tag + "energy not additive");

    // ADC monotonicity over the feasible menu entries at least as high.
    double prev_area = c.area, prev_energy = c.energy;
    for (int adc : default_space().adc_bits) {
      if (adc <= p.reram.adc_bits) continue;
      DesignPoint q = p;
      q.reram.adc_bits = adc;
      canonicalize(q);
      const CostReport cq = model_cost(map_model(q), tp);
      if (cq.area < prev_area || cq.energy < prev_energy) o.fail(tag + "ADC not monotone");
      prev_area = cq.area;
      prev_energy = cq.energy;
    }

    // Time scale-freeness: exact for powers of two, 1e-12 relative otherwise.
    for (double f : {2.0, 0.25, cd(rng)}) {
      const bool exact = f == 2.0 || f == 0.25;
      const CostReport sc = model_cost(mm, tp.scaled_time(f));
      auto same = [&](double scaled, double base) {
        return exact ? scaled == f * base : std::abs(scaled - f * base) <= 1e-12 * f * base;
      };
      if (sc.bottleneck_stage != c.bottleneck_stage) o.fail(tag + "bottleneck moved under scaling");
      if (!same(sc.serial_latency, c.serial_latency)) o.fail(tag + "serial latency not scaled");
      for (std::size_t i = 0; i < c.operators.size(); ++i) {
        if (!same(sc.operators[i].latency, c.operators[i].latency) ||
            !same(sc.operators[i].stage_time, c.operators[i].stage_time))
          o.fail(tag + "latency of " + c.operators[i].id + " not scaled");
      }
    }
  }
  if (o.ok) o.detail = "1000 mapped models";
  return o;
}

Outcome cardinality_diagnostic() {
  Outcome o;
  const Cardinality c = cardinality(default_space());
  const std::string digits = c.count.str();
  const double lead = std::stod("0." + digits.substr(0, 17));
  const double log10 = std::log10(lead) + static_cast<double>(digits.size());
  const double ref = std::log10(2.0) + 54;
  std::cout << "  convention: " << c.convention << "\n";
  std::cout << "  count: " << digits << " (" << digits.size() << " digits, log10 " << log10
            << "; 2e54 has log10 " << ref << ", difference " << log10 - ref << ")\n";
  if (digits.size() < 53) o.fail(std::to_string(digits.size()) + " digits");
  if (o.ok) o.detail = std::to_string(digits.size()) + " digits";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"1 FM functional equivalence", fm_equivalence},
      {"2 DP functional equivalence", dp_equivalence},
      {"3 crossbar losslessness", crossbar_lossless},
      {"4 saturation boundary", saturation_boundary},
      {"5 evolutionary search semantics", search_semantics},
      {"6 overlap scheduling", overlap_scheduling},
      {"7 placement and bank conflicts", placement_rules},
      {"8 cost-model invariances", cost_invariances},
      {"9 cardinality diagnostic", cardinality_diagnostic},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << name << ": " << o.detail << std::endl;
    failures += o.ok ? 0 : 1;
  }
  return failures;
}
