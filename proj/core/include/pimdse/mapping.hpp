// SPDX-License-Identifier: Apache-2.0
//
// Allocation of a design point's operators onto crossbar tiles and the three
// compute engines (MVM, DP, FM), plus the memory tiles holding embeddings.
#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pimdse/design_space.hpp"

namespace pimdse {

/// Activation width used throughout the datapath.
inline constexpr int kActivationBits = 8;

enum class Engine { MVM, DP, FM };
std::string_view to_string(Engine e);

struct DPGeometry {
  int k_sparse = 0;     // round(sqrt(2 * dim_d))
  int merged_rows = 0;  // k_sparse + 1
  int pair_count = 0;   // C(merged_rows, 2)
};

DPGeometry dp_geometry(int dim_d);

/// Bits needed for |sum| of n values of a_bits signed width.
int fm_sum_bits(int n, int a_bits);

struct MappedOperator {
  std::string id;
  OperatorKind kind = OperatorKind::FC;
  Engine engine = Engine::MVM;
  TensorKind branch = TensorKind::Dense;
  int in_dim = 0;   // word lines of the programmed matrix
  int out_dim = 0;  // logical columns of the programmed matrix
  int w_bits = 8;   // width of the programmed values
  int planes = 0;
  int row_tiles = 0;
  int col_tiles = 0;
  int passes = 1;   // reads per inference (EFC: one per sparse column)
  int programming_vectors = 0;
  bool runtime_programmed = false;
  std::optional<DPGeometry> dp;
  std::vector<MappedOperator> components;  // FC/EFC stages of DP and FM

  /// Tiles of this node alone, excluding components.
  long long own_tiles() const { return static_cast<long long>(row_tiles) * col_tiles; }
  /// Tiles including all components.
  long long total_tiles() const;
};

struct MappedBlock {
  int index = 1;
  std::vector<MappedOperator> ops;  // dense branch first, then sparse
};

struct TilePlan {
  long long memory = 0;
  long long mvm = 0;
  long long dp = 0;
  long long fm = 0;
  long long compute() const { return mvm + dp + fm; }
  bool operator==(const TilePlan&) const = default;
};

struct Topology {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
};

struct MappedModel {
  std::string point_id;
  ModelConfig model;
  ReRAMConfig reram;
  int a_bits = kActivationBits;
  std::vector<MappedBlock> blocks;
  MappedOperator final_fc;
  TilePlan tile_plan;
  Topology topology;

  /// Every operator in execution order, final FC last.
  std::vector<const MappedOperator*> operators() const;
};

MappedOperator map_fc(int in_dim, int out_dim, int w_bits, const ReRAMConfig& reram);
MappedOperator map_efc(int n_in, int n_out, int dim_s, int w_bits, const ReRAMConfig& reram);
/// dense_in defaults to dim_d when the producing width is not known.
MappedOperator map_dp(int dim_d, int dim_s, int n_s, int w_bits, const ReRAMConfig& reram,
                      int dense_in = 0, int a_bits = kActivationBits);
MappedOperator map_fm(int n_s, int dim_s, int w_bits, const ReRAMConfig& reram,
                      int dim_d_out = 0, int a_bits = kActivationBits);
MappedOperator map_dsi(int in_dim, int n_s, int dim_s, int w_bits, const ReRAMConfig& reram);

/// Embedding storage tiles for all tables at a_bits per value.
long long memory_tiles(const ModelConfig& model, const ReRAMConfig& reram,
                       int a_bits = kActivationBits);

/// Throws ValidationError for points that fail validate() against the
/// point's own workload shape.
MappedModel map_model(const DesignPoint& point, int a_bits = kActivationBits);

/// Same as map_model but without menu checks; used for hand-built models.
MappedModel map_model_unchecked(const DesignPoint& point, int a_bits = kActivationBits);

nlohmann::json to_json(const MappedOperator& op);
nlohmann::json to_json(const MappedModel& mm);

}  // namespace pimdse
