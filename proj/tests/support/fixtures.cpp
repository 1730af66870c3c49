// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

namespace pimdse::testing {

DesignPoint minimal_point(const SpaceDescriptor& space) {
  DesignPoint p;
  p.model.num_sparse_features = space.num_sparse_features;
  p.model.embedding_dim = space.embedding_dim;
  p.model.dense_input_dim = space.dense_input_dim;
  p.model.embedding_rows = space.embedding_rows;
  p.model.final_fc_bits = 8;
  for (int i = 1; i <= space.num_blocks; ++i) {
    BlockConfig b;
    b.index = i;
    b.dense_ops = {{OperatorKind::FC, 8}};
    b.sparse_ops = {{OperatorKind::EFC, 8}};
    b.dense_inputs = {{i - 1, TensorKind::Dense}};
    b.sparse_inputs = {{i - 1, TensorKind::Sparse}};
    b.dim_d = 16;
    b.dim_s = 16;
    p.model.blocks.push_back(b);
  }
  p.reram = {1, 1, 16, 4};
  canonicalize(p);
  return p;
}

DesignPoint small_mixed_point(const ReRAMConfig& reram) {
  DesignPoint p;
  ModelConfig& m = p.model;
  m.num_sparse_features = 3;
  m.embedding_dim = 4;
  m.dense_input_dim = 5;
  m.embedding_rows = 8;
  m.final_fc_bits = 4;

  BlockConfig b1;
  b1.index = 1;
  b1.dense_ops = {{OperatorKind::FC, 4}, {OperatorKind::DP, 4}};
  b1.sparse_ops = {{OperatorKind::EFC, 4}, {OperatorKind::DSI, 8}};
  b1.dense_inputs = {{0, TensorKind::Dense}};
  b1.sparse_inputs = {{0, TensorKind::Sparse}};
  b1.dim_d = 8;
  b1.dim_s = 4;

  BlockConfig b2;
  b2.index = 2;
  b2.dense_ops = {{OperatorKind::FC, 8}, {OperatorKind::FM, 4}};
  b2.sparse_ops = {{OperatorKind::EFC, 8}};
  b2.dense_inputs = {{0, TensorKind::Dense}, {1, TensorKind::Dense}, {1, TensorKind::Sparse}};
  b2.sparse_inputs = {{0, TensorKind::Sparse}, {1, TensorKind::Sparse}};
  b2.dim_d = 6;
  b2.dim_s = 6;

  m.blocks = {b1, b2};
  p.reram = reram;
  canonicalize(p);
  return p;
}

int lossless_adc(int dac_bits, int cell_bits, int rows) {
  int lg = 0;
  while ((1 << lg) < rows) ++lg;
  return dac_bits + cell_bits + lg;
}

crossbar::IntMatrix random_matrix(int rows, int cols, std::int64_t lo, std::int64_t hi,
                                  std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  crossbar::IntMatrix m(rows, cols);
  for (auto& v : m.data) v = d(rng);
  return m;
}

std::vector<std::int64_t> random_vector(int n, std::int64_t lo, std::int64_t hi,
                                        std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace pimdse::testing
