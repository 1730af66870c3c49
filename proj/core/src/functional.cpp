// SPDX-License-Identifier: Apache-2.0
#include "pimdse/functional.hpp"

#include <algorithm>
#include <random>

#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"

namespace pimdse {
namespace {

using crossbar::IntMatrix;
using crossbar::SaturationLog;
using Vec = std::vector<std::int64_t>;

int ceil_log2(long long n) {
  int b = 0;
  while ((1LL << b) < n) ++b;
  return b;
}

crossbar::CrossbarSpec spec_of(const ReRAMConfig& r) {
  return {r.xbar_size, r.xbar_size, r.cell_bits};
}

crossbar::ConverterSpec conv_of(const ReRAMConfig& r) {
  return {r.dac_bits, r.adc_bits, 1};
}

QuantLayer random_layer(int in, int out, int w_bits, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::int64_t hi = (std::int64_t{1} << (w_bits - 1)) - 1;
  std::uniform_int_distribution<std::int64_t> d(-hi, hi);
  QuantLayer l;
  l.weights = IntMatrix(in, out);
  for (auto& v : l.weights.data) v = d(rng);
  l.w_bits = w_bits;
  l.shift = w_bits - 1 + ceil_log2(in) / 2;
  return l;
}

QuantLayer layer_for(const MappedOperator& op, std::uint64_t seed) {
  return random_layer(op.in_dim, op.out_dim, op.w_bits, seed);
}

std::int64_t clamp_act(std::int64_t v, int a_bits) {
  const std::int64_t hi = (std::int64_t{1} << (a_bits - 1)) - 1;
  return std::clamp(v, -hi, hi);
}

void check_layer(const QuantLayer& l, const MappedOperator& op) {
  if (l.weights.rows != op.in_dim || l.weights.cols != op.out_dim) {
    throw ShapeMismatch(op.id + ": weights are " + std::to_string(l.weights.rows) + "x" +
                        std::to_string(l.weights.cols) + ", mapped " +
                        std::to_string(op.in_dim) + "x" + std::to_string(op.out_dim));
  }
}

void flatten_into(Vec& out, const IntMatrix& t) {
  out.insert(out.end(), t.data.begin(), t.data.end());
}

// Each tensor is flattened and cut into width-wide rows, the last padded.
void chunk_into(std::vector<Vec>& rows, const IntMatrix& t, int width) {
  for (std::size_t off = 0; off < t.data.size(); off += width) {
    Vec row(width, 0);
    const std::size_t n = std::min<std::size_t>(width, t.data.size() - off);
    std::copy_n(t.data.begin() + off, n, row.begin());
    rows.push_back(std::move(row));
  }
}

}  // namespace

std::int64_t requantize(std::int64_t v, int shift, int a_bits) {
  return clamp_act(v >> shift, a_bits);  // arithmetic shift is floor division
}

QuantizedWeights random_weights(const MappedModel& mm, std::uint64_t seed) {
  QuantizedWeights qw;
  std::uint64_t counter = 0;
  auto next = [&] { return derive_seed(seed, ++counter); };
  for (const MappedBlock& b : mm.blocks) {
    BlockWeights bw;
    for (const MappedOperator& op : b.ops) {
      OpWeights ow;
      ow.kind = op.kind;
      if (op.components.empty()) {
        ow.layers.push_back(layer_for(op, next()));
      } else {
        for (const MappedOperator& c : op.components) ow.layers.push_back(layer_for(c, next()));
      }
      if (op.kind == OperatorKind::DP) {
        ow.engine_shift = mm.a_bits - 1 + ceil_log2(op.in_dim) / 2;
      } else if (op.kind == OperatorKind::FM) {
        ow.engine_shift = mm.a_bits - 1 + ceil_log2(op.out_dim);
      }
      bw.ops.push_back(std::move(ow));
    }
    qw.blocks.push_back(std::move(bw));
  }
  qw.final_fc = layer_for(mm.final_fc, next());
  return qw;
}

FmEngineResult fm_engine(const std::vector<Vec>& vectors, const ReRAMConfig& reram, int a_bits) {
  // One vector has no pairs; the datapath then yields zeros.
  if (vectors.empty()) throw ShapeMismatch("fm_engine: no vectors");
  const int n = static_cast<int>(vectors.size());
  const int width = static_cast<int>(vectors.front().size());
  IntMatrix m(width, n);
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(vectors[j].size()) != width) {
      throw ShapeMismatch("fm_engine: vectors differ in length");
    }
    for (int i = 0; i < width; ++i) m(i, j) = vectors[j][i];
  }
  const auto pm = crossbar::program_signed(m, a_bits, spec_of(reram),
                                           crossbar::Orientation::TransposedWrite);
  const auto conv = conv_of(reram);

  FmEngineResult res;
  crossbar::MvmResult s = crossbar::ones_read(pm, conv);
  res.log.merge(s.log);
  res.sum = s.values;

  std::vector<std::uint64_t> mag(width);
  for (int i = 0; i < width; ++i) {
    mag[i] = static_cast<std::uint64_t>(s.values[i] < 0 ? -s.values[i] : s.values[i]);
  }
  const auto sq = crossbar::mbsa_square(mag, fm_sum_bits(n, a_bits));
  res.square_of_sum.assign(sq.begin(), sq.end());

  // Row i driven with its own entries yields sum_j x_ji^2 on that row.
  res.sum_of_squares.assign(width, 0);
  Vec drive(n);
  for (int i = 0; i < width; ++i) {
    for (int j = 0; j < n; ++j) drive[j] = m(i, j);
    crossbar::MvmResult r = crossbar::mvm_transposed(pm, drive, a_bits, conv);
    res.log.merge(r.log);
    res.sum_of_squares[i] = r.values[i];
  }
  res.ix.resize(width);
  for (int i = 0; i < width; ++i) res.ix[i] = res.square_of_sum[i] - res.sum_of_squares[i];
  return res;
}

DpEngineResult dp_engine(const std::vector<Vec>& rows, const ReRAMConfig& reram, int a_bits) {
  if (rows.size() < 2) throw ShapeMismatch("dp_engine: needs at least two rows");
  const int n = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  IntMatrix xt(width, n);
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(rows[j].size()) != width) {
      throw ShapeMismatch("dp_engine: rows differ in length");
    }
    for (int c = 0; c < width; ++c) xt(c, j) = rows[j][c];
  }
  const auto pm = crossbar::program_signed(xt, a_bits, spec_of(reram),
                                           crossbar::Orientation::TransposedWrite);
  const auto conv = conv_of(reram);
  DpEngineResult res;
  res.pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i + 1 < n; ++i) {
    crossbar::MvmResult r = crossbar::mvm(pm, rows[i], a_bits, conv);
    res.log.merge(r.log);
    for (int j = i + 1; j < n; ++j) res.pairs.push_back(r.values[j]);
  }
  return res;
}

bool ForwardResult::clean() const {
  return std::all_of(logs.begin(), logs.end(), [](const auto& kv) { return kv.second.clean(); });
}

FunctionalModel::FunctionalModel(const MappedModel& mm, const QuantizedWeights& w) : mm_(mm) {
  if (w.blocks.size() != mm.blocks.size()) {
    throw ShapeMismatch("weights cover " + std::to_string(w.blocks.size()) + " blocks, model has " +
                        std::to_string(mm.blocks.size()));
  }
  const auto spec = spec_of(mm.reram);
  auto program = [&](const QuantLayer& l, const MappedOperator& op) {
    check_layer(l, op);
    if (l.w_bits != op.w_bits) throw ShapeMismatch(op.id + ": weight bits differ from mapping");
    return Layer{crossbar::program_signed(l.weights, l.w_bits, spec), l.shift};
  };
  for (std::size_t b = 0; b < mm.blocks.size(); ++b) {
    const MappedBlock& mb = mm.blocks[b];
    if (w.blocks[b].ops.size() != mb.ops.size()) {
      throw ShapeMismatch("block " + std::to_string(mb.index) + ": operator count differs");
    }
    std::vector<Op> ops;
    for (std::size_t k = 0; k < mb.ops.size(); ++k) {
      const MappedOperator& mo = mb.ops[k];
      const OpWeights& ow = w.blocks[b].ops[k];
      if (ow.kind != mo.kind) throw ShapeMismatch(mo.id + ": operator kind differs");
      Op op{&mo, {}, ow.engine_shift};
      const std::size_t expect = mo.components.empty() ? 1 : mo.components.size();
      if (ow.layers.size() != expect) throw ShapeMismatch(mo.id + ": wrong layer count");
      for (std::size_t l = 0; l < expect; ++l) {
        op.layers.push_back(program(ow.layers[l], mo.components.empty() ? mo : mo.components[l]));
      }
      ops.push_back(std::move(op));
    }
    blocks_.push_back(std::move(ops));
  }
  final_.push_back(program(w.final_fc, mm.final_fc));
}

ForwardResult FunctionalModel::forward(const Vec& dense_in, const IntMatrix& sparse_in) const {
  const ModelConfig& model = mm_.model;
  const int a = mm_.a_bits;
  const auto conv = conv_of(mm_.reram);
  if (static_cast<int>(dense_in.size()) != model.dense_input_dim) {
    throw ShapeMismatch("dense input has " + std::to_string(dense_in.size()) + " entries, expected " +
                        std::to_string(model.dense_input_dim));
  }
  if (sparse_in.rows != model.num_sparse_features || sparse_in.cols != model.embedding_dim) {
    throw ShapeMismatch("sparse input must be num_sparse_features x embedding_dim");
  }

  ForwardResult res;
  auto linear = [&](const Layer& l, const Vec& x, const std::string& id) {
    crossbar::MvmResult r = crossbar::mvm(l.matrix, x, a, conv);
    res.logs[id].merge(r.log);
    return r.values;
  };
  auto requant_all = [&](Vec v, int shift) {
    for (auto& e : v) e = requantize(e, shift, a);
    return v;
  };
  // Y (n_out x cols) = W^T X column by column, X given as rows.
  auto sparse_linear = [&](const Layer& l, const std::vector<Vec>& x_rows, int cols,
                           const std::string& id) {
    const int n_out = l.matrix.meta().cols;
    IntMatrix y(n_out, cols);
    Vec col(x_rows.size());
    for (int c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < x_rows.size(); ++r) col[r] = x_rows[r][c];
      const Vec out = linear(l, col, id);
      for (int o = 0; o < n_out; ++o) y(o, c) = requantize(out[o], l.shift, a);
    }
    return y;
  };

  IntMatrix dense_stem(1, model.dense_input_dim);
  dense_stem.data = dense_in;
  auto tensor = [&](TensorRef ref) -> IntMatrix {
    if (ref.block == 0) return ref.kind == TensorKind::Dense ? dense_stem : sparse_in;
    if (ref.kind == TensorKind::Sparse) return res.block_sparse[ref.block - 1];
    IntMatrix t(1, static_cast<int>(res.block_dense[ref.block - 1].size()));
    t.data = res.block_dense[ref.block - 1];
    return t;
  };

  for (std::size_t b = 0; b < mm_.blocks.size(); ++b) {
    const BlockConfig& bc = model.blocks[b];
    Vec xd;
    for (TensorRef r : bc.dense_inputs) flatten_into(xd, tensor(r));
    std::vector<Vec> xs;
    for (TensorRef r : bc.sparse_inputs) chunk_into(xs, tensor(r), bc.dim_s);

    Vec dense_acc(bc.dim_d, 0);
    IntMatrix sparse_acc(model.num_sparse_features, bc.dim_s);
    for (const Op& op : blocks_[b]) {
      const MappedOperator& mo = *op.mapped;
      switch (mo.kind) {
        case OperatorKind::FC: {
          const Vec y = requant_all(linear(op.layers[0], xd, mo.id), op.layers[0].shift);
          for (int i = 0; i < bc.dim_d; ++i) dense_acc[i] += y[i];
          break;
        }
        case OperatorKind::DSI: {
          const Vec y = requant_all(linear(op.layers[0], xd, mo.id), op.layers[0].shift);
          for (std::size_t i = 0; i < y.size(); ++i) sparse_acc.data[i] += y[i];
          break;
        }
        case OperatorKind::EFC: {
          const IntMatrix y = sparse_linear(op.layers[0], xs, bc.dim_s, mo.id);
          for (std::size_t i = 0; i < y.data.size(); ++i) sparse_acc.data[i] += y.data[i];
          break;
        }
        case OperatorKind::DP: {
          std::vector<Vec> merged;
          merged.push_back(requant_all(linear(op.layers[0], xd, mo.components[0].id),
                                       op.layers[0].shift));
          const IntMatrix e = sparse_linear(op.layers[1], xs, bc.dim_s, mo.components[1].id);
          for (int r = 0; r < e.rows; ++r) {
            merged.emplace_back(e.data.begin() + static_cast<std::ptrdiff_t>(r) * e.cols,
                                e.data.begin() + static_cast<std::ptrdiff_t>(r + 1) * e.cols);
          }
          DpEngineResult d = dp_engine(merged, mm_.reram, a);
          res.logs[mo.id].merge(d.log);
          const Vec pairs = requant_all(std::move(d.pairs), op.engine_shift);
          const Vec y = requant_all(linear(op.layers[2], pairs, mo.components[2].id),
                                    op.layers[2].shift);
          for (int i = 0; i < bc.dim_d; ++i) dense_acc[i] += y[i];
          break;
        }
        case OperatorKind::FM: {
          FmEngineResult f = fm_engine(xs, mm_.reram, a);
          res.logs[mo.id].merge(f.log);
          const Vec ix = requant_all(std::move(f.ix), op.engine_shift);
          const Vec y = requant_all(linear(op.layers[0], ix, mo.components[0].id),
                                    op.layers[0].shift);
          for (int i = 0; i < bc.dim_d; ++i) dense_acc[i] += y[i];
          break;
        }
      }
    }
    for (auto& v : dense_acc) v = std::max<std::int64_t>(0, clamp_act(v, a));
    for (auto& v : sparse_acc.data) v = clamp_act(v, a);
    res.block_dense.push_back(std::move(dense_acc));
    res.block_sparse.push_back(std::move(sparse_acc));
  }

  const Vec last = mm_.blocks.empty() ? dense_in : res.block_dense.back();
  res.logit = linear(final_[0], last, mm_.final_fc.id);
  return res;
}

ForwardResult functional_forward(const MappedModel& mm, const Vec& dense_in,
                                 const IntMatrix& sparse_in, const QuantizedWeights& weights) {
  return FunctionalModel(mm, weights).forward(dense_in, sparse_in);
}

}  // namespace pimdse
