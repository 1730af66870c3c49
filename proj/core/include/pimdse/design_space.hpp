// SPDX-License-Identifier: Apache-2.0
//
// Joint model / quantization / ReRAM design space: value types, validation,
// random sampling, mutation and exact cardinality.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pimdse {

enum class OperatorKind { FC, EFC, DP, DSI, FM };

inline constexpr OperatorKind kAllOperators[] = {
    OperatorKind::FC, OperatorKind::EFC, OperatorKind::DP, OperatorKind::DSI,
    OperatorKind::FM};

std::string_view to_string(OperatorKind kind);
std::optional<OperatorKind> parse_operator(std::string_view name);

/// FC, DP and FM produce dense outputs and live in the dense branch;
/// EFC and DSI produce sparse outputs and live in the sparse branch.
constexpr bool produces_dense(OperatorKind k) {
  return k == OperatorKind::FC || k == OperatorKind::DP || k == OperatorKind::FM;
}
constexpr bool consumes_dense(OperatorKind k) {
  return k == OperatorKind::FC || k == OperatorKind::DP || k == OperatorKind::DSI;
}
constexpr bool consumes_sparse(OperatorKind k) {
  return k == OperatorKind::EFC || k == OperatorKind::DP || k == OperatorKind::FM;
}

enum class TensorKind { Dense, Sparse };

/// Reference to a tensor produced upstream of a block. Block 0 is the input
/// stem: its dense tensor is the raw dense features and its sparse tensor is
/// the stack of embedding lookups.
struct TensorRef {
  int block = 0;
  TensorKind kind = TensorKind::Dense;
  auto operator<=>(const TensorRef&) const = default;
};

struct OpChoice {
  OperatorKind kind = OperatorKind::FC;
  int weight_bits = 8;
  auto operator<=>(const OpChoice&) const = default;
};

struct BlockConfig {
  int index = 1;
  std::vector<OpChoice> dense_ops;
  std::vector<OpChoice> sparse_ops;
  std::vector<TensorRef> dense_inputs;
  std::vector<TensorRef> sparse_inputs;
  int dim_d = 16;
  int dim_s = 16;
  bool operator==(const BlockConfig&) const = default;
};

struct ModelConfig {
  std::vector<BlockConfig> blocks;
  int final_fc_bits = 8;
  int num_sparse_features = 26;
  int embedding_dim = 16;
  int dense_input_dim = 13;
  int embedding_rows = 4096;  // rows per embedding table
  bool operator==(const ModelConfig&) const = default;
};

struct ReRAMConfig {
  int dac_bits = 1;
  int cell_bits = 1;
  int xbar_size = 16;
  int adc_bits = 4;
  bool operator==(const ReRAMConfig&) const = default;
};

struct DesignPoint {
  ModelConfig model;
  ReRAMConfig reram;
  std::string point_id;  // SHA-256 of the canonical JSON form
  bool operator==(const DesignPoint&) const = default;
};

/// Menus of the searchable space plus the fixed workload shape.
struct SpaceDescriptor {
  int num_blocks = 7;
  std::vector<OperatorKind> dense_operators{OperatorKind::FC, OperatorKind::DP,
                                            OperatorKind::FM};
  std::vector<OperatorKind> sparse_operators{OperatorKind::EFC,
                                             OperatorKind::DSI};
  std::vector<int> weight_bits{4, 8};
  std::vector<int> final_fc_bits{4, 8};
  std::vector<int> dim_d{16, 32, 64, 128, 256, 512, 768, 1024};
  std::vector<int> dim_s{16, 32, 48, 64};
  std::vector<int> dac_bits{1, 2};
  std::vector<int> cell_bits{1, 2};
  std::vector<int> xbar_size{16, 32, 64};
  std::vector<int> adc_bits{4, 6, 8};
  int num_sparse_features = 26;
  int embedding_dim = 16;
  int dense_input_dim = 13;
  int embedding_rows = 4096;

  bool operator==(const SpaceDescriptor&) const = default;
};

/// The full recommender + ReRAM space with N = 7 blocks.
const SpaceDescriptor& default_space();

/// Throws ValidationError for empty menus, 6-bit weights or non-positive
/// shape parameters.
void check_space(const SpaceDescriptor& space);

/// Candidate inputs of block `index`'s dense and sparse branch. The dense
/// branch sees the dense stem, the sparse branch the sparse stem, and both
/// see the dense and sparse outputs of every earlier block.
std::vector<TensorRef> dense_pool(int index);
std::vector<TensorRef> sparse_pool(int index);

struct TensorShape {
  int rows = 1;
  int cols = 0;
  long long size() const { return static_cast<long long>(rows) * cols; }
};

/// Shape of a referenced tensor. Dense tensors have rows == 1.
TensorShape tensor_shape(const ModelConfig& model, TensorRef ref);

/// Dense-branch input width: the selected tensors flattened and concatenated.
int dense_input_width(const ModelConfig& model, const BlockConfig& block);

/// Sparse-branch input row count: each selected tensor flattened and
/// re-chunked into dim_s-wide rows (zero padded), rows concatenated.
int sparse_input_rows(const ModelConfig& model, const BlockConfig& block);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

ValidationReport validate(const DesignPoint& point,
                          const SpaceDescriptor& space = default_space());

/// True when adc_bits >= dac_bits + cell_bits.
constexpr bool reram_feasible(const ReRAMConfig& r) {
  return r.adc_bits >= r.dac_bits + r.cell_bits;
}

/// Sorts operator and input lists into canonical order and recomputes
/// point_id.
void canonicalize(DesignPoint& point);

DesignPoint sample_random(std::uint64_t seed,
                          const SpaceDescriptor& space = default_space());

/// Applies `num_mutations` chained atomic mutations. Each mutation draws one
/// of eight actions uniformly; draws that are illegal or no-ops are redrawn
/// up to kMutationRetries times, after which that step is the identity.
/// Throws std::invalid_argument when num_mutations < 1.
DesignPoint mutate(const DesignPoint& point, std::uint64_t seed,
                   int num_mutations,
                   const SpaceDescriptor& space = default_space());

inline constexpr int kMutationRetries = 16;

enum class MutationAction {
  SwapDenseOp,
  SwapSparseOp,
  ChangeDimD,
  ChangeDimS,
  RewireConnection,
  ToggleInteractionOp,
  ChangeWeightBits,
  ChangeReRAMField,
};
inline constexpr int kNumMutationActions = 8;

/// One atomic mutation of a fixed kind; std::nullopt when the action has no
/// legal outcome for this point (e.g. no alternative operator to swap in).
std::optional<DesignPoint> apply_action(const DesignPoint& point,
                                        MutationAction action,
                                        std::uint64_t seed,
                                        const SpaceDescriptor& space);

struct Cardinality {
  boost::multiprecision::cpp_int count;
  std::string convention;
};

Cardinality cardinality(const SpaceDescriptor& space);

// --- JSON ---------------------------------------------------------------

nlohmann::json to_json(const DesignPoint& point);
/// Throws ParseError on malformed documents. point_id is recomputed; a
/// mismatching stored id is a ParseError.
DesignPoint design_point_from_json(const nlohmann::json& doc);

/// Canonical serialization (sorted keys, no point_id) used for hashing.
std::string canonical_form(const DesignPoint& point);

nlohmann::json to_json(const SpaceDescriptor& space);
SpaceDescriptor space_from_json(const nlohmann::json& doc);

}  // namespace pimdse
