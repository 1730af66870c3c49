// SPDX-License-Identifier: Apache-2.0
#include "pimdse/mapping.hpp"

#include <cmath>
#include <map>

#include "pimdse/crossbar.hpp"
#include "pimdse/errors.hpp"

namespace pimdse {
namespace {

int ceil_div(long long a, long long b) { return static_cast<int>((a + b - 1) / b); }

int ceil_log2(long long n) {
  int b = 0;
  while ((1LL << b) < n) ++b;
  return b;
}

void tile(MappedOperator& op, const ReRAMConfig& r) {
  op.planes = crossbar::num_planes(op.w_bits, r.cell_bits);
  op.row_tiles = ceil_div(op.in_dim, r.xbar_size);
  op.col_tiles = ceil_div(static_cast<long long>(op.out_dim) * op.planes * 2, r.xbar_size);
}

void require_positive(int v, const char* what) {
  if (v < 1) throw ShapeMismatch(std::string(what) + " must be >= 1");
}

void prefix_ids(MappedOperator& op, const std::string& id) {
  op.id = id;
  for (MappedOperator& c : op.components) {
    const std::string tail = c.id;
    c.id = id + "." + tail;
  }
}

void accumulate(TilePlan& plan, const MappedOperator& op) {
  switch (op.engine) {
    case Engine::MVM: plan.mvm += op.own_tiles(); break;
    case Engine::DP: plan.dp += op.own_tiles(); break;
    case Engine::FM: plan.fm += op.own_tiles(); break;
  }
  for (const MappedOperator& c : op.components) accumulate(plan, c);
}

std::string stem_node(TensorKind k) {
  return k == TensorKind::Dense ? "stem.dense" : "stem.lookup";
}

std::string op_id(int block, TensorKind branch, OperatorKind kind) {
  return "b" + std::to_string(block) + (branch == TensorKind::Dense ? ".dense." : ".sparse.") +
         std::string(to_string(kind));
}

MappedModel build(const DesignPoint& p, int a_bits) {
  const ModelConfig& m = p.model;
  const ReRAMConfig& r = p.reram;
  MappedModel mm;
  mm.point_id = p.point_id;
  mm.model = m;
  mm.reram = r;
  mm.a_bits = a_bits;

  // Producer node ids of every tensor, keyed by reference.
  std::map<TensorRef, std::vector<std::string>> producers;
  producers[{0, TensorKind::Dense}] = {stem_node(TensorKind::Dense)};
  producers[{0, TensorKind::Sparse}] = {stem_node(TensorKind::Sparse)};
  mm.topology.nodes = {stem_node(TensorKind::Dense), stem_node(TensorKind::Sparse)};

  auto wire = [&](const std::string& dst, const std::vector<TensorRef>& refs) {
    for (TensorRef ref : refs) {
      auto it = producers.find(ref);
      if (it == producers.end()) {
        throw ShapeMismatch(dst + ": input from block " + std::to_string(ref.block) +
                            " is not upstream");
      }
      for (const std::string& src : it->second) mm.topology.edges.emplace_back(src, dst);
    }
  };

  for (const BlockConfig& b : m.blocks) {
    const int d_in = dense_input_width(m, b);
    const int s_rows = sparse_input_rows(m, b);
    MappedBlock out;
    out.index = b.index;
    std::vector<std::string> dense_ids, sparse_ids;
    for (TensorKind branch : {TensorKind::Dense, TensorKind::Sparse}) {
      const auto& ops = branch == TensorKind::Dense ? b.dense_ops : b.sparse_ops;
      for (const OpChoice& o : ops) {
        MappedOperator mo;
        switch (o.kind) {
          case OperatorKind::FC: mo = map_fc(d_in, b.dim_d, o.weight_bits, r); break;
          case OperatorKind::EFC:
            mo = map_efc(s_rows, m.num_sparse_features, b.dim_s, o.weight_bits, r);
            break;
          case OperatorKind::DP:
            mo = map_dp(b.dim_d, b.dim_s, s_rows, o.weight_bits, r, d_in, a_bits);
            break;
          case OperatorKind::FM:
            mo = map_fm(s_rows, b.dim_s, o.weight_bits, r, b.dim_d, a_bits);
            break;
          case OperatorKind::DSI:
            mo = map_dsi(d_in, m.num_sparse_features, b.dim_s, o.weight_bits, r);
            break;
        }
        mo.branch = branch;
        const std::string id = op_id(b.index, branch, o.kind);
        prefix_ids(mo, id);
        mm.topology.nodes.push_back(id);
        if (consumes_dense(o.kind)) wire(id, b.dense_inputs);
        if (consumes_sparse(o.kind)) wire(id, b.sparse_inputs);
        (branch == TensorKind::Dense ? dense_ids : sparse_ids).push_back(id);
        out.ops.push_back(std::move(mo));
      }
    }
    producers[{b.index, TensorKind::Dense}] = dense_ids;
    producers[{b.index, TensorKind::Sparse}] = sparse_ids;
    mm.blocks.push_back(std::move(out));
  }

  const int last_width = m.blocks.empty() ? m.dense_input_dim : m.blocks.back().dim_d;
  mm.final_fc = map_fc(last_width, 1, m.final_fc_bits, r);
  mm.final_fc.id = "final.FC";
  mm.topology.nodes.push_back(mm.final_fc.id);
  wire(mm.final_fc.id, {{static_cast<int>(m.blocks.size()), TensorKind::Dense}});

  mm.tile_plan.memory = memory_tiles(m, r, a_bits);
  for (const MappedOperator* op : mm.operators()) accumulate(mm.tile_plan, *op);
  return mm;
}

}  // namespace

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::MVM: return "MVM";
    case Engine::DP: return "DP";
    case Engine::FM: return "FM";
  }
  return "?";
}

DPGeometry dp_geometry(int dim_d) {
  require_positive(dim_d, "dim_d");
  DPGeometry g;
  g.k_sparse = static_cast<int>(std::lround(std::sqrt(2.0 * dim_d)));
  g.merged_rows = g.k_sparse + 1;
  g.pair_count = g.merged_rows * (g.merged_rows - 1) / 2;
  return g;
}

int fm_sum_bits(int n, int a_bits) { return a_bits - 1 + ceil_log2(n); }

long long MappedOperator::total_tiles() const {
  long long t = own_tiles();
  for (const MappedOperator& c : components) t += c.total_tiles();
  return t;
}

std::vector<const MappedOperator*> MappedModel::operators() const {
  std::vector<const MappedOperator*> out;
  for (const MappedBlock& b : blocks)
    for (const MappedOperator& op : b.ops) out.push_back(&op);
  out.push_back(&final_fc);
  return out;
}

MappedOperator map_fc(int in_dim, int out_dim, int w_bits, const ReRAMConfig& reram) {
  require_positive(in_dim, "in_dim");
  require_positive(out_dim, "out_dim");
  MappedOperator op;
  op.id = "FC";
  op.kind = OperatorKind::FC;
  op.in_dim = in_dim;
  op.out_dim = out_dim;
  op.w_bits = w_bits;
  tile(op, reram);
  return op;
}

MappedOperator map_efc(int n_in, int n_out, int dim_s, int w_bits, const ReRAMConfig& reram) {
  require_positive(dim_s, "dim_s");
  MappedOperator op = map_fc(n_in, n_out, w_bits, reram);
  op.id = "EFC";
  op.kind = OperatorKind::EFC;
  op.passes = dim_s;
  return op;
}

MappedOperator map_dsi(int in_dim, int n_s, int dim_s, int w_bits, const ReRAMConfig& reram) {
  MappedOperator op = map_fc(in_dim, n_s * dim_s, w_bits, reram);
  op.id = "DSI";
  op.kind = OperatorKind::DSI;
  return op;
}

MappedOperator map_dp(int dim_d, int dim_s, int n_s, int w_bits, const ReRAMConfig& reram,
                      int dense_in, int a_bits) {
  require_positive(n_s, "n_s");
  require_positive(dim_s, "dim_s");
  const DPGeometry g = dp_geometry(dim_d);

  MappedOperator fc_in = map_fc(dense_in > 0 ? dense_in : dim_d, dim_s, w_bits, reram);
  fc_in.id = "fc_in";
  MappedOperator efc = map_efc(n_s, g.k_sparse, dim_s, w_bits, reram);
  efc.id = "efc";
  MappedOperator fc_out = map_fc(g.pair_count, dim_d, w_bits, reram);
  fc_out.id = "fc_out";

  // Engine array: merged rows programmed as columns, dim_s word lines.
  MappedOperator op;
  op.id = "DP";
  op.kind = OperatorKind::DP;
  op.engine = Engine::DP;
  op.in_dim = dim_s;
  op.out_dim = g.merged_rows;
  op.w_bits = a_bits;
  tile(op, reram);
  op.passes = g.merged_rows - 1;
  op.programming_vectors = g.merged_rows;
  op.runtime_programmed = true;
  op.dp = g;
  op.components = {fc_in, efc, fc_out};
  return op;
}

MappedOperator map_fm(int n_s, int dim_s, int w_bits, const ReRAMConfig& reram, int dim_d_out,
                      int a_bits) {
  if (n_s < 1) throw ShapeMismatch("FM needs at least one sparse vector");
  require_positive(dim_s, "dim_s");
  MappedOperator fc = map_fc(dim_s, dim_d_out > 0 ? dim_d_out : dim_s, w_bits, reram);
  fc.id = "fc_out";

  MappedOperator op;
  op.id = "FM";
  op.kind = OperatorKind::FM;
  op.engine = Engine::FM;
  op.in_dim = dim_s;
  op.out_dim = n_s;
  op.w_bits = a_bits;
  tile(op, reram);
  op.passes = dim_s;  // sum-of-squares reads, one per element
  op.programming_vectors = n_s;
  op.runtime_programmed = true;
  op.components = {fc};
  return op;
}

long long memory_tiles(const ModelConfig& m, const ReRAMConfig& r, int a_bits) {
  const long long bits = static_cast<long long>(m.num_sparse_features) * m.embedding_rows *
                         m.embedding_dim * a_bits;
  const long long per_tile = static_cast<long long>(r.xbar_size) * r.xbar_size * r.cell_bits;
  return (bits + per_tile - 1) / per_tile;
}

MappedModel map_model(const DesignPoint& point, int a_bits) {
  SpaceDescriptor space = default_space();
  space.num_blocks = static_cast<int>(point.model.blocks.size());
  space.num_sparse_features = point.model.num_sparse_features;
  space.embedding_dim = point.model.embedding_dim;
  space.dense_input_dim = point.model.dense_input_dim;
  space.embedding_rows = point.model.embedding_rows;
  const ValidationReport rep = validate(point, space);
  if (!rep.ok) throw ValidationError("map_model: " + rep.violations.front());
  return build(point, a_bits);
}

MappedModel map_model_unchecked(const DesignPoint& point, int a_bits) {
  return build(point, a_bits);
}

nlohmann::json to_json(const MappedOperator& op) {
  nlohmann::json j = {{"id", op.id},
                      {"kind", std::string(to_string(op.kind))},
                      {"engine", std::string(to_string(op.engine))},
                      {"branch", op.branch == TensorKind::Dense ? "dense" : "sparse"},
                      {"in_dim", op.in_dim},
                      {"out_dim", op.out_dim},
                      {"w_bits", op.w_bits},
                      {"planes", op.planes},
                      {"row_tiles", op.row_tiles},
                      {"col_tiles", op.col_tiles},
                      {"passes", op.passes},
                      {"programming_vectors", op.programming_vectors},
                      {"runtime_programmed", op.runtime_programmed}};
  if (op.dp) {
    j["dp_geometry"] = {{"k_sparse", op.dp->k_sparse},
                        {"merged_rows", op.dp->merged_rows},
                        {"pair_count", op.dp->pair_count}};
  }
  if (!op.components.empty()) {
    nlohmann::json comps = nlohmann::json::array();
    for (const MappedOperator& c : op.components) comps.push_back(to_json(c));
    j["components"] = std::move(comps);
  }
  return j;
}

nlohmann::json to_json(const MappedModel& mm) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const MappedBlock& b : mm.blocks) {
    nlohmann::json ops = nlohmann::json::array();
    for (const MappedOperator& op : b.ops) ops.push_back(to_json(op));
    blocks.push_back({{"index", b.index}, {"operators", std::move(ops)}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : mm.topology.edges) edges.push_back({a, b});
  return {{"point_id", mm.point_id},
          {"a_bits", mm.a_bits},
          {"reram",
           {{"dac_bits", mm.reram.dac_bits},
            {"cell_bits", mm.reram.cell_bits},
            {"xbar_size", mm.reram.xbar_size},
            {"adc_bits", mm.reram.adc_bits}}},
          {"blocks", std::move(blocks)},
          {"final_fc", to_json(mm.final_fc)},
          {"tile_plan",
           {{"memory", mm.tile_plan.memory},
            {"mvm", mm.tile_plan.mvm},
            {"dp", mm.tile_plan.dp},
            {"fm", mm.tile_plan.fm}}},
          {"topology", {{"nodes", mm.topology.nodes}, {"edges", std::move(edges)}}}};
}

}  // namespace pimdse
