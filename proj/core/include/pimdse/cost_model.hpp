// SPDX-License-Identifier: Apache-2.0
//
// Analytic area / energy / latency model over a mapped model. Technology
// numbers come from a TechParams profile; all results are sums of named
// components so that totals can be audited.
#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pimdse/mapping.hpp"

namespace pimdse {

struct TechParams {
  std::string label = "illustrative, not MNSIM-derived";

  // time per event
  double xbar_read_time = 10.0;   // one slice read of one array
  double xbar_write_time = 50.0;  // one programmed vector
  double adc_time = 1.0;          // one conversion
  double mbsa_time = 1.0;         // one bit pass
  double t_bank = 20.0;           // one embedding-bank access
  double activation_time = 2.0;   // functional unit pass at the output

  // energy per event
  std::map<int, double> adc_energy{{4, 0.5}, {6, 1.0}, {8, 2.0}};
  double dac_energy = 0.05;
  double cell_read_energy = 0.001;
  double cell_write_energy = 0.1;
  double mbsa_energy = 0.02;
  double buffer_read_energy = 0.01;   // per word
  double buffer_write_energy = 0.02;  // per word
  double bank_read_energy = 1.0;      // per embedding vector
  double activation_energy = 0.01;

  // area
  std::map<int, double> adc_area{{4, 0.002}, {6, 0.004}, {8, 0.008}};
  double dac_area = 0.0001;
  double cell_area = 0.00001;
  double mbsa_area = 0.001;
  double buffer_area_per_byte = 0.00005;
  double memory_periphery_area = 0.01;  // per memory tile
  double controller_overhead = 0.05;    // fraction of all other components

  int adcs_per_xbar = 4;
  int num_banks = 8;

  /// Copy with every time entry multiplied by c.
  TechParams scaled_time(double c) const;

  double adc_energy_at(int bits) const;
  double adc_area_at(int bits) const;
};

/// Throws ValidationError on non-positive entries or ADC tables that are not
/// monotone in resolution.
void check_tech(const TechParams& tp);

const TechParams& default_tech();

nlohmann::json to_json(const TechParams& tp);
TechParams tech_from_json(const nlohmann::json& doc);

/// Latency split of one top-level operator.
struct OpTiming {
  double produce = 0;  // stages generating runtime-programmed vectors
  double program = 0;  // programming_vectors * xbar_write_time
  double compute = 0;  // engine or crossbar reads, MBSA
  double tail = 0;     // trailing FC of DP / FM
  int vectors = 0;     // programmed vectors (k)

  double total() const { return produce + program + compute + tail; }
};

int num_input_slices(int a_bits, const ReRAMConfig& reram);

/// One crossbar read pass of a plain MVM node (no components).
double mvm_pass_latency(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram,
                        int a_bits);

OpTiming op_timing(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram,
                   int a_bits);

/// Serial latency of the operator: produce + program + compute + tail.
double op_latency(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram,
                  int a_bits);

/// Programming of vector j overlaps production of vector j + 1.
double overlapped_ready_time(int k, double t_e, double t_p);

/// Stage time of the operator inside the pipeline. With overlap the produce
/// and program phases of DP / FM are interleaved.
double op_stage_time(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram,
                     int a_bits, bool overlap = true);

using Breakdown = std::map<std::string, double>;

/// Component areas of one operator (components included); no controller.
Breakdown op_area_breakdown(const MappedOperator& mo, const TechParams& tp,
                            const ReRAMConfig& reram, int a_bits = kActivationBits);
Breakdown op_energy_breakdown(const MappedOperator& mo, const TechParams& tp,
                              const ReRAMConfig& reram, int a_bits);

double op_area(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram);
double op_energy(const MappedOperator& mo, const TechParams& tp, const ReRAMConfig& reram,
                 int a_bits);

struct StageTime {
  std::string id;
  double time = 0;
};

/// Compute stages (one per top-level operator) in execution order.
std::vector<StageTime> compute_stages(const MappedModel& mm, const TechParams& tp,
                                      bool overlap = true);

struct OpCost {
  std::string id;
  double latency = 0;
  double stage_time = 0;
  double area = 0;
  double energy = 0;
};

struct CostReport {
  double area = 0;
  double energy = 0;      // per inference
  double peak_power = 0;  // max over compute stages of energy / stage time
  double serial_latency = 0;
  Breakdown area_components;
  Breakdown energy_components;
  std::vector<OpCost> operators;
  std::string bottleneck_stage;  // argmax compute stage time, first on ties
};

CostReport model_cost(const MappedModel& mm, const TechParams& tp);

nlohmann::json to_json(const CostReport& r);
/// One row per operator plus a totals row.
std::string to_csv(const CostReport& r);

}  // namespace pimdse
