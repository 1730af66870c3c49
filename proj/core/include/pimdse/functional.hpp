// SPDX-License-Identifier: Apache-2.0
//
// Functional execution of a mapped model through the crossbar model, batch
// size one. Every layer output is requantized to the activation width with a
// per-layer right shift; dense branch outputs pass through ReLU.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pimdse/crossbar.hpp"
#include "pimdse/mapping.hpp"

namespace pimdse {

/// clamp(floor(v / 2^shift), -(2^(a_bits-1) - 1), 2^(a_bits-1) - 1)
std::int64_t requantize(std::int64_t v, int shift, int a_bits);

struct QuantLayer {
  crossbar::IntMatrix weights;  // rows = inputs, cols = outputs
  int w_bits = 8;
  int shift = 0;
};

/// Layers of one operator:
///   FC, DSI, EFC: {main}
///   DP: {fc_in, efc, fc_out}, engine_shift applied to the pair products
///   FM: {fc_out}, engine_shift applied to the interaction vector
struct OpWeights {
  OperatorKind kind = OperatorKind::FC;
  std::vector<QuantLayer> layers;
  int engine_shift = 0;
};

struct BlockWeights {
  std::vector<OpWeights> ops;  // parallel to MappedBlock::ops
};

struct QuantizedWeights {
  std::vector<BlockWeights> blocks;
  QuantLayer final_fc;
};

/// Uniform random weights in the signed range of each operator's w_bits,
/// with shifts that keep typical activations inside the activation range.
QuantizedWeights random_weights(const MappedModel& mm, std::uint64_t seed);

// --- engines --------------------------------------------------------------

struct FmEngineResult {
  std::vector<std::int64_t> sum;
  std::vector<std::int64_t> square_of_sum;
  std::vector<std::int64_t> sum_of_squares;
  std::vector<std::int64_t> ix;  // square_of_sum - sum_of_squares
  crossbar::SaturationLog log;
};

/// Programs the n vectors (each dim_s wide) into a transposed-write array
/// group, reads the element sums with an all-ones drive, squares them in
/// the MBSA and subtracts the per-row sums of squares.
FmEngineResult fm_engine(const std::vector<std::vector<std::int64_t>>& vectors,
                         const ReRAMConfig& reram, int a_bits = kActivationBits);

struct DpEngineResult {
  std::vector<std::int64_t> pairs;  // (0,1), (0,2), ..., (1,2), ... row-major
  crossbar::SaturationLog log;
};

/// Programs the rows of X as columns and feeds each row back on the word
/// lines; keeps the strict upper triangle of X X^T.
DpEngineResult dp_engine(const std::vector<std::vector<std::int64_t>>& rows,
                         const ReRAMConfig& reram, int a_bits = kActivationBits);

// --- whole model ----------------------------------------------------------

struct ForwardResult {
  std::vector<std::vector<std::int64_t>> block_dense;  // per block, dim_d
  std::vector<crossbar::IntMatrix> block_sparse;       // per block, N_s x dim_s
  std::vector<std::int64_t> logit;                     // final FC accumulator
  std::map<std::string, crossbar::SaturationLog> logs;  // per operator id

  bool clean() const;
};

/// Programs every layer once; forward() may then be called repeatedly.
class FunctionalModel {
 public:
  /// Throws ShapeMismatch when the weights do not fit the mapped operators.
  FunctionalModel(const MappedModel& mm, const QuantizedWeights& weights);

  /// dense_in has dense_input_dim entries, sparse_in is
  /// num_sparse_features x embedding_dim. Throws ShapeMismatch otherwise.
  ForwardResult forward(const std::vector<std::int64_t>& dense_in,
                        const crossbar::IntMatrix& sparse_in) const;

 private:
  struct Layer {
    crossbar::ProgrammedMatrix matrix;
    int shift;
  };
  struct Op {
    const MappedOperator* mapped;
    std::vector<Layer> layers;
    int engine_shift;
  };

  const MappedModel& mm_;
  std::vector<std::vector<Op>> blocks_;
  std::vector<Layer> final_;
};

ForwardResult functional_forward(const MappedModel& mm, const std::vector<std::int64_t>& dense_in,
                                 const crossbar::IntMatrix& sparse_in,
                                 const QuantizedWeights& weights);

}  // namespace pimdse
