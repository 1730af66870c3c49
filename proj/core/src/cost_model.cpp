// SPDX-License-Identifier: Apache-2.0
#include "pimdse/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "pimdse/crossbar.hpp"
#include "pimdse/errors.hpp"

namespace pimdse {
namespace {

using nlohmann::json;

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

long long phys_cols(const MappedOperator& mo) {
  return static_cast<long long>(mo.out_dim) * mo.planes * 2;
}

// One slice-read with column ADCs: array read plus multiplexed conversions.
double read_step(long long active, const TechParams& tp) {
  return tp.xbar_read_time + static_cast<double>(ceil_div(active, tp.adcs_per_xbar)) * tp.adc_time;
}

// Transposed read: (plane, sign) groups are driven one after another and
// rows are converted.
double transposed_read(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                       int a_bits) {
  const long long active = std::min<long long>(r.xbar_size, mo.in_dim);
  return static_cast<double>(num_input_slices(a_bits, r)) * 2 * mo.planes * read_step(active, tp);
}

void add(Breakdown& b, const Breakdown& o) {
  for (const auto& [k, v] : o) b[k] += v;
}

double sum(const Breakdown& b) {
  double s = 0;
  for (const auto& [_, v] : b) s += v;
  return s;
}

// Area of the tiles of a single node.
Breakdown node_area(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                    int a_bits) {
  const double tiles = static_cast<double>(mo.own_tiles());
  const double x = r.xbar_size;
  Breakdown b;
  b["crossbar"] = tiles * x * x * tp.cell_area;
  b["adc"] = tiles * tp.adcs_per_xbar * tp.adc_area_at(r.adc_bits);
  b["dac"] = tiles * x * tp.dac_area;
  b["mbsa"] = mo.engine == Engine::FM ? tp.mbsa_area : 0.0;
  const double bytes =
      static_cast<double>(mo.in_dim + mo.out_dim) * mo.passes * a_bits / 8.0;
  b["buffer"] = bytes * tp.buffer_area_per_byte;
  return b;
}

Breakdown node_energy(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                      int a_bits) {
  const double in = mo.in_dim;
  const double phys = static_cast<double>(phys_cols(mo));
  const double adc_e = tp.adc_energy_at(r.adc_bits);
  Breakdown b;
  b["adc"] = b["dac"] = b["crossbar"] = b["buffer"] = b["program"] = b["mbsa"] = 0.0;

  if (mo.engine == Engine::FM) {
    const double reads = static_cast<double>(num_input_slices(2, r)) +
                         static_cast<double>(mo.passes) * num_input_slices(a_bits, r);
    const double n = mo.out_dim;
    b["adc"] = reads * 2 * mo.planes * in * mo.col_tiles * adc_e;
    b["dac"] = reads * phys * tp.dac_energy;
    b["crossbar"] = reads * in * phys * tp.cell_read_energy;
    b["mbsa"] = in * fm_sum_bits(mo.out_dim, a_bits) * tp.mbsa_energy;
    b["buffer"] = in * n * tp.buffer_read_energy + in * tp.buffer_write_energy;
  } else {
    const double steps = static_cast<double>(mo.passes) * num_input_slices(a_bits, r);
    b["adc"] = steps * mo.row_tiles * phys * adc_e;
    b["dac"] = steps * in * mo.col_tiles * tp.dac_energy;
    b["crossbar"] = steps * in * phys * tp.cell_read_energy;
    b["buffer"] = mo.passes * (in * tp.buffer_read_energy + mo.out_dim * tp.buffer_write_energy);
  }
  if (mo.runtime_programmed) {
    b["program"] = static_cast<double>(mo.programming_vectors) * in * mo.planes * 2 *
                   tp.cell_write_energy;
  }
  return b;
}

double number_or(const json& doc, const char* key, double fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number()) throw ParseError(std::string("tech.") + key + ": expected a number");
  return it->get<double>();
}

std::map<int, double> table_from(const json& doc, const char* key,
                                 const std::map<int, double>& fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_object()) throw ParseError(std::string("tech.") + key + ": expected an object");
  std::map<int, double> out;
  for (const auto& [k, v] : it->items()) {
    std::size_t used = 0;
    int bits = 0;
    try {
      bits = std::stoi(k, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != k.size() || !v.is_number()) {
      throw ParseError(std::string("tech.") + key + ": expected {\"<bits>\": number}");
    }
    out[bits] = v.get<double>();
  }
  return out;
}

json table_json(const std::map<int, double>& t) {
  json j = json::object();
  for (const auto& [k, v] : t) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

TechParams TechParams::scaled_time(double c) const {
  TechParams t = *this;
  t.xbar_read_time *= c;
  t.xbar_write_time *= c;
  t.adc_time *= c;
  t.mbsa_time *= c;
  t.t_bank *= c;
  t.activation_time *= c;
  return t;
}

double TechParams::adc_energy_at(int bits) const {
  auto it = adc_energy.find(bits);
  if (it == adc_energy.end()) throw ValidationError("tech: no ADC energy for " + std::to_string(bits) + " bits");
  return it->second;
}

double TechParams::adc_area_at(int bits) const {
  auto it = adc_area.find(bits);
  if (it == adc_area.end()) throw ValidationError("tech: no ADC area for " + std::to_string(bits) + " bits");
  return it->second;
}

void check_tech(const TechParams& tp) {
  const std::pair<const char*, double> scalars[] = {
      {"xbar_read_time", tp.xbar_read_time},
      {"xbar_write_time", tp.xbar_write_time},
      {"adc_time", tp.adc_time},
      {"mbsa_time", tp.mbsa_time},
      {"t_bank", tp.t_bank},
      {"activation_time", tp.activation_time},
      {"dac_energy", tp.dac_energy},
      {"cell_read_energy", tp.cell_read_energy},
      {"cell_write_energy", tp.cell_write_energy},
      {"mbsa_energy", tp.mbsa_energy},
      {"buffer_read_energy", tp.buffer_read_energy},
      {"buffer_write_energy", tp.buffer_write_energy},
      {"bank_read_energy", tp.bank_read_energy},
      {"activation_energy", tp.activation_energy},
      {"dac_area", tp.dac_area},
      {"cell_area", tp.cell_area},
      {"mbsa_area", tp.mbsa_area},
      {"buffer_area_per_byte", tp.buffer_area_per_byte},
      {"memory_periphery_area", tp.memory_periphery_area},
      {"controller_overhead", tp.controller_overhead},
  };
  for (const auto& [name, v] : scalars) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw ValidationError(std::string("tech: ") + name + " must be > 0");
    }
  }
  if (tp.adcs_per_xbar < 1) throw ValidationError("tech: adcs_per_xbar must be >= 1");
  if (tp.num_banks < 1) throw ValidationError("tech: num_banks must be >= 1");
  for (const auto* table : {&tp.adc_energy, &tp.adc_area}) {
    if (table->empty()) throw ValidationError("tech: empty ADC table");
    double prev = 0;
    for (const auto& [bits, v] : *table) {
      if (!(v > 0)) throw ValidationError("tech: ADC entries must be > 0");
      if (v < prev) throw ValidationError("tech: ADC table must be nondecreasing in bits");
      prev = v;
    }
  }
}

const TechParams& default_tech() {
  static const TechParams tp;
  return tp;
}

json to_json(const TechParams& tp) {
  return {{"label", tp.label},
          {"xbar_read_time", tp.xbar_read_time},
          {"xbar_write_time", tp.xbar_write_time},
          {"adc_time", tp.adc_time},
          {"mbsa_time", tp.mbsa_time},
          {"t_bank", tp.t_bank},
          {"activation_time", tp.activation_time},
          {"adc_energy", table_json(tp.adc_energy)},
          {"dac_energy", tp.dac_energy},
          {"cell_read_energy", tp.cell_read_energy},
          {"cell_write_energy", tp.cell_write_energy},
          {"mbsa_energy", tp.mbsa_energy},
          {"buffer_read_energy", tp.buffer_read_energy},
          {"buffer_write_energy", tp.buffer_write_energy},
          {"bank_read_energy", tp.bank_read_energy},
          {"activation_energy", tp.activation_energy},
          {"adc_area", table_json(tp.adc_area)},
          {"dac_area", tp.dac_area},
          {"cell_area", tp.cell_area},
          {"mbsa_area", tp.mbsa_area},
          {"buffer_area_per_byte", tp.buffer_area_per_byte},
          {"memory_periphery_area", tp.memory_periphery_area},
          {"controller_overhead", tp.controller_overhead},
          {"adcs_per_xbar", tp.adcs_per_xbar},
          {"num_banks", tp.num_banks}};
}

TechParams tech_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("tech: expected an object");
  static const std::set<std::string> known = {
      "label", "xbar_read_time", "xbar_write_time", "adc_time", "mbsa_time", "t_bank",
      "activation_time", "adc_energy", "dac_energy", "cell_read_energy", "cell_write_energy",
      "mbsa_energy", "buffer_read_energy", "buffer_write_energy", "bank_read_energy",
      "activation_energy", "adc_area", "dac_area", "cell_area", "mbsa_area",
      "buffer_area_per_byte", "memory_periphery_area", "controller_overhead", "adcs_per_xbar",
      "num_banks"};
  for (const auto& [k, _] : doc.items()) {
    if (!known.count(k)) throw ParseError("tech: unknown key '" + k + "'");
  }
  TechParams tp;
  if (auto it = doc.find("label"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("tech.label: expected a string");
    tp.label = it->get<std::string>();
  }
  tp.xbar_read_time = number_or(doc, "xbar_read_time", tp.xbar_read_time);
  tp.xbar_write_time = number_or(doc, "xbar_write_time", tp.xbar_write_time);
  tp.adc_time = number_or(doc, "adc_time", tp.adc_time);
  tp.mbsa_time = number_or(doc, "mbsa_time", tp.mbsa_time);
  tp.t_bank = number_or(doc, "t_bank", tp.t_bank);
  tp.activation_time = number_or(doc, "activation_time", tp.activation_time);
  tp.adc_energy = table_from(doc, "adc_energy", tp.adc_energy);
  tp.dac_energy = number_or(doc, "dac_energy", tp.dac_energy);
  tp.cell_read_energy = number_or(doc, "cell_read_energy", tp.cell_read_energy);
  tp.cell_write_energy = number_or(doc, "cell_write_energy", tp.cell_write_energy);
  tp.mbsa_energy = number_or(doc, "mbsa_energy", tp.mbsa_energy);
  tp.buffer_read_energy = number_or(doc, "buffer_read_energy", tp.buffer_read_energy);
  tp.buffer_write_energy = number_or(doc, "buffer_write_energy", tp.buffer_write_energy);
  tp.bank_read_energy = number_or(doc, "bank_read_energy", tp.bank_read_energy);
  tp.activation_energy = number_or(doc, "activation_energy", tp.activation_energy);
  tp.adc_area = table_from(doc, "adc_area", tp.adc_area);
  tp.dac_area = number_or(doc, "dac_area", tp.dac_area);
  tp.cell_area = number_or(doc, "cell_area", tp.cell_area);
  tp.mbsa_area = number_or(doc, "mbsa_area", tp.mbsa_area);
  tp.buffer_area_per_byte = number_or(doc, "buffer_area_per_byte", tp.buffer_area_per_byte);
  tp.memory_periphery_area =
      number_or(doc, "memory_periphery_area", tp.memory_periphery_area);
  tp.controller_overhead = number_or(doc, "controller_overhead", tp.controller_overhead);
  for (auto [key, field] : {std::pair{"adcs_per_xbar", &tp.adcs_per_xbar},
                            std::pair{"num_banks", &tp.num_banks}}) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number_integer()) throw ParseError(std::string("tech.") + key + ": expected an integer");
      *field = it->get<int>();
    }
  }
  check_tech(tp);
  return tp;
}

int num_input_slices(int a_bits, const ReRAMConfig& reram) {
  return crossbar::num_slices(a_bits, reram.dac_bits);
}

double mvm_pass_latency(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                        int a_bits) {
  if (mo.own_tiles() == 0) return 0.0;
  const long long active = std::min<long long>(r.xbar_size, phys_cols(mo));
  return num_input_slices(a_bits, r) * read_step(active, tp);
}

OpTiming op_timing(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                   int a_bits) {
  OpTiming t;
  switch (mo.engine) {
    case Engine::MVM:
      t.compute = mo.passes * mvm_pass_latency(mo, tp, r, a_bits);
      break;
    case Engine::DP: {
      const auto& c = mo.components;  // fc_in, efc, fc_out
      t.produce = std::max(op_latency(c.at(0), tp, r, a_bits), op_latency(c.at(1), tp, r, a_bits));
      t.vectors = mo.programming_vectors;
      t.program = mo.programming_vectors * tp.xbar_write_time;
      t.compute = mo.passes * mvm_pass_latency(mo, tp, r, a_bits);
      t.tail = op_latency(c.at(2), tp, r, a_bits);
      break;
    }
    case Engine::FM: {
      t.vectors = mo.programming_vectors;
      t.program = mo.programming_vectors * tp.xbar_write_time;
      const double ones = transposed_read(mo, tp, r, 2);
      const double squares = mo.passes * transposed_read(mo, tp, r, a_bits);
      const double mbsa = fm_sum_bits(mo.out_dim, a_bits) * tp.mbsa_time;
      t.compute = ones + std::max(mbsa, squares);
      t.tail = op_latency(mo.components.at(0), tp, r, a_bits);
      break;
    }
  }
  return t;
}

double op_latency(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                  int a_bits) {
  return op_timing(mo, tp, r, a_bits).total();
}

double overlapped_ready_time(int k, double t_e, double t_p) {
  if (k < 1) return 0.0;
  return t_e + (k - 1) * std::max(t_e, t_p) + t_p;
}

double op_stage_time(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                     int a_bits, bool overlap) {
  const OpTiming t = op_timing(mo, tp, r, a_bits);
  if (!overlap || t.vectors == 0) return t.total();
  const double t_e = t.produce / t.vectors;
  const double t_p = tp.xbar_write_time;
  return overlapped_ready_time(t.vectors, t_e, t_p) + t.compute + t.tail;
}

Breakdown op_area_breakdown(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                            int a_bits) {
  Breakdown b = node_area(mo, tp, r, a_bits);
  for (const MappedOperator& c : mo.components) add(b, op_area_breakdown(c, tp, r, a_bits));
  return b;
}

Breakdown op_energy_breakdown(const MappedOperator& mo, const TechParams& tp,
                              const ReRAMConfig& r, int a_bits) {
  Breakdown b = node_energy(mo, tp, r, a_bits);
  for (const MappedOperator& c : mo.components) add(b, op_energy_breakdown(c, tp, r, a_bits));
  return b;
}

double op_area(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r) {
  return sum(op_area_breakdown(mo, tp, r));
}

double op_energy(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& r,
                 int a_bits) {
  return sum(op_energy_breakdown(mo, tp, r, a_bits));
}

std::vector<StageTime> compute_stages(const MappedModel& mm, const TechParams& tp, bool overlap) {
  std::vector<StageTime> out;
  for (const MappedOperator* op : mm.operators()) {
    out.push_back({op->id, op_stage_time(*op, tp, mm.reram, mm.a_bits, overlap)});
  }
  return out;
}

CostReport model_cost(const MappedModel& mm, const TechParams& tp) {
  CostReport rep;
  const ReRAMConfig& r = mm.reram;
  const double overhead = tp.controller_overhead;

  for (const MappedOperator* op : mm.operators()) {
    const Breakdown a = op_area_breakdown(*op, tp, r, mm.a_bits);
    const Breakdown e = op_energy_breakdown(*op, tp, r, mm.a_bits);
    add(rep.area_components, a);
    add(rep.energy_components, e);
    OpCost oc;
    oc.id = op->id;
    oc.latency = op_latency(*op, tp, r, mm.a_bits);
    oc.stage_time = op_stage_time(*op, tp, r, mm.a_bits, true);
    oc.area = sum(a);
    oc.energy = sum(e);
    rep.serial_latency += oc.latency;
    rep.operators.push_back(std::move(oc));
  }

  const double x = r.xbar_size;
  rep.area_components["memory"] =
      static_cast<double>(mm.tile_plan.memory) * (x * x * tp.cell_area + tp.memory_periphery_area);
  rep.energy_components["lookup"] = mm.model.num_sparse_features * tp.bank_read_energy;
  double activations = 1;  // final output
  for (const BlockConfig& b : mm.model.blocks) {
    activations += b.dim_d + static_cast<double>(mm.model.num_sparse_features) * b.dim_s;
  }
  rep.energy_components["activation"] = activations * tp.activation_energy;

  rep.area_components["controller"] = 0;
  rep.energy_components["controller"] = 0;
  rep.area_components["controller"] = overhead * sum(rep.area_components);
  rep.energy_components["controller"] = overhead * sum(rep.energy_components);
  rep.area = sum(rep.area_components);
  rep.energy = sum(rep.energy_components);

  double worst = -1;
  for (const OpCost& oc : rep.operators) {
    if (oc.stage_time > worst) {
      worst = oc.stage_time;
      rep.bottleneck_stage = oc.id;
    }
    if (oc.stage_time > 0) {
      rep.peak_power = std::max(rep.peak_power, oc.energy * (1 + overhead) / oc.stage_time);
    }
  }
  return rep;
}

json to_json(const CostReport& r) {
  json ops = json::array();
  for (const OpCost& o : r.operators) {
    ops.push_back({{"id", o.id},
                   {"latency", o.latency},
                   {"stage_time", o.stage_time},
                   {"area", o.area},
                   {"energy", o.energy}});
  }
  return {{"area", r.area},
          {"energy_per_inference", r.energy},
          {"peak_power", r.peak_power},
          {"serial_latency", r.serial_latency},
          {"area_components", r.area_components},
          {"energy_components", r.energy_components},
          {"operators", std::move(ops)},
          {"bottleneck_stage", r.bottleneck_stage}};
}

std::string to_csv(const CostReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "id,latency,stage_time,area,energy\n";
  for (const OpCost& o : r.operators) {
    os << o.id << ',' << o.latency << ',' << o.stage_time << ',' << o.area << ',' << o.energy
       << '\n';
  }
  os << "total," << r.serial_latency << ",," << r.area << ',' << r.energy << '\n';
  return os.str();
}

}  // namespace pimdse
