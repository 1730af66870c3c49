// SPDX-License-Identifier: Apache-2.0
#include <set>

#include "pimdse/design_space.hpp"
#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"

namespace pimdse {
namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

int int_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) {
    throw ParseError(where + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    if (!known.count(k)) throw ParseError(where + ": unknown key '" + k + "'");
  }
}

json ref_json(TensorRef r) {
  return {{"block", r.block},
          {"kind", r.kind == TensorKind::Dense ? "dense" : "sparse"}};
}

TensorRef ref_from(const json& j, const std::string& where) {
  TensorRef r;
  r.block = int_field(j, "block", where);
  const json& k = field(j, "kind", where);
  if (k == "dense") {
    r.kind = TensorKind::Dense;
  } else if (k == "sparse") {
    r.kind = TensorKind::Sparse;
  } else {
    throw ParseError(where + ".kind: expected \"dense\" or \"sparse\"");
  }
  return r;
}

json ops_json(const std::vector<OpChoice>& ops) {
  json arr = json::array();
  for (const OpChoice& o : ops) {
    arr.push_back({{"kind", std::string(to_string(o.kind))},
                   {"weight_bits", o.weight_bits}});
  }
  return arr;
}

std::vector<OpChoice> ops_from(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw ParseError(where + ": expected an array");
  std::vector<OpChoice> out;
  for (const json& o : arr) {
    const json& k = field(o, "kind", where);
    auto kind = k.is_string() ? parse_operator(k.get<std::string>()) : std::nullopt;
    if (!kind) throw ParseError(where + ": unknown operator " + k.dump());
    out.push_back({*kind, int_field(o, "weight_bits", where)});
  }
  return out;
}

json model_json(const ModelConfig& m) {
  json blocks = json::array();
  for (const BlockConfig& b : m.blocks) {
    json din = json::array(), sin = json::array();
    for (TensorRef r : b.dense_inputs) din.push_back(ref_json(r));
    for (TensorRef r : b.sparse_inputs) sin.push_back(ref_json(r));
    blocks.push_back({{"index", b.index},
                      {"dense_ops", ops_json(b.dense_ops)},
                      {"sparse_ops", ops_json(b.sparse_ops)},
                      {"dense_inputs", din},
                      {"sparse_inputs", sin},
                      {"dim_d", b.dim_d},
                      {"dim_s", b.dim_s}});
  }
  return {{"blocks", blocks},
          {"final_fc_bits", m.final_fc_bits},
          {"num_sparse_features", m.num_sparse_features},
          {"embedding_dim", m.embedding_dim},
          {"dense_input_dim", m.dense_input_dim},
          {"embedding_rows", m.embedding_rows}};
}

json reram_json(const ReRAMConfig& r) {
  return {{"dac_bits", r.dac_bits},
          {"cell_bits", r.cell_bits},
          {"xbar_size", r.xbar_size},
          {"adc_bits", r.adc_bits}};
}

std::vector<int> int_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer()) throw ParseError(where + ": expected integers");
    out.push_back(e.get<int>());
  }
  return out;
}

std::vector<OperatorKind> op_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array");
  std::vector<OperatorKind> out;
  for (const json& e : v) {
    auto k = e.is_string() ? parse_operator(e.get<std::string>()) : std::nullopt;
    if (!k) throw ParseError(where + ": unknown operator " + e.dump());
    out.push_back(*k);
  }
  return out;
}

}  // namespace

std::string canonical_form(const DesignPoint& p) {
  const json doc = {{"model", model_json(p.model)}, {"reram", reram_json(p.reram)}};
  return doc.dump();
}

json to_json(const DesignPoint& p) {
  return {{"model", model_json(p.model)},
          {"reram", reram_json(p.reram)},
          {"point_id", p.point_id}};
}

DesignPoint design_point_from_json(const json& doc) {
  reject_unknown(doc, {"model", "reram", "point_id"}, "point");
  DesignPoint p;
  const json& m = field(doc, "model", "point");
  reject_unknown(m,
                 {"blocks", "final_fc_bits", "num_sparse_features",
                  "embedding_dim", "dense_input_dim", "embedding_rows"},
                 "model");
  p.model.final_fc_bits = int_field(m, "final_fc_bits", "model");
  p.model.num_sparse_features = int_field(m, "num_sparse_features", "model");
  p.model.embedding_dim = int_field(m, "embedding_dim", "model");
  p.model.dense_input_dim = int_field(m, "dense_input_dim", "model");
  p.model.embedding_rows = int_field(m, "embedding_rows", "model");
  const json& blocks = field(m, "blocks", "model");
  if (!blocks.is_array()) throw ParseError("model.blocks: expected an array");
  for (const json& bj : blocks) {
    const std::string where = "model.blocks[" + std::to_string(p.model.blocks.size()) + "]";
    reject_unknown(bj,
                   {"index", "dense_ops", "sparse_ops", "dense_inputs",
                    "sparse_inputs", "dim_d", "dim_s"},
                   where);
    BlockConfig b;
    b.index = int_field(bj, "index", where);
    b.dense_ops = ops_from(field(bj, "dense_ops", where), where + ".dense_ops");
    b.sparse_ops = ops_from(field(bj, "sparse_ops", where), where + ".sparse_ops");
    for (bool dense : {true, false}) {
      const char* key = dense ? "dense_inputs" : "sparse_inputs";
      const json& arr = field(bj, key, where);
      if (!arr.is_array()) throw ParseError(where + "." + key + ": expected an array");
      for (const json& r : arr) {
        (dense ? b.dense_inputs : b.sparse_inputs).push_back(ref_from(r, where + "." + key));
      }
    }
    b.dim_d = int_field(bj, "dim_d", where);
    b.dim_s = int_field(bj, "dim_s", where);
    p.model.blocks.push_back(std::move(b));
  }
  const json& r = field(doc, "reram", "point");
  reject_unknown(r, {"dac_bits", "cell_bits", "xbar_size", "adc_bits"}, "reram");
  p.reram.dac_bits = int_field(r, "dac_bits", "reram");
  p.reram.cell_bits = int_field(r, "cell_bits", "reram");
  p.reram.xbar_size = int_field(r, "xbar_size", "reram");
  p.reram.adc_bits = int_field(r, "adc_bits", "reram");

  std::string stored;
  if (auto it = doc.find("point_id"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("point.point_id: expected a string");
    stored = it->get<std::string>();
  }
  canonicalize(p);
  if (!stored.empty() && stored != p.point_id) {
    throw ParseError("point.point_id does not match the canonical content hash");
  }
  return p;
}

json to_json(const SpaceDescriptor& s) {
  json dense = json::array(), sparse = json::array();
  for (auto k : s.dense_operators) dense.push_back(std::string(to_string(k)));
  for (auto k : s.sparse_operators) sparse.push_back(std::string(to_string(k)));
  return {{"num_blocks", s.num_blocks},
          {"dense_operators", dense},
          {"sparse_operators", sparse},
          {"weight_bits", s.weight_bits},
          {"final_fc_bits", s.final_fc_bits},
          {"dim_d", s.dim_d},
          {"dim_s", s.dim_s},
          {"dac_bits", s.dac_bits},
          {"cell_bits", s.cell_bits},
          {"xbar_size", s.xbar_size},
          {"adc_bits", s.adc_bits},
          {"num_sparse_features", s.num_sparse_features},
          {"embedding_dim", s.embedding_dim},
          {"dense_input_dim", s.dense_input_dim},
          {"embedding_rows", s.embedding_rows}};
}

SpaceDescriptor space_from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("space: expected an object");
  SpaceDescriptor s;
  for (const auto& [key, v] : doc.items()) {
    const std::string where = "space." + key;
    if (key == "num_blocks") s.num_blocks = int_field(doc, "num_blocks", "space");
    else if (key == "dense_operators") s.dense_operators = op_list(v, where);
    else if (key == "sparse_operators") s.sparse_operators = op_list(v, where);
    else if (key == "weight_bits") s.weight_bits = int_list(v, where);
    else if (key == "final_fc_bits") s.final_fc_bits = int_list(v, where);
    else if (key == "dim_d") s.dim_d = int_list(v, where);
    else if (key == "dim_s") s.dim_s = int_list(v, where);
    else if (key == "dac_bits") s.dac_bits = int_list(v, where);
    else if (key == "cell_bits") s.cell_bits = int_list(v, where);
    else if (key == "xbar_size") s.xbar_size = int_list(v, where);
    else if (key == "adc_bits") s.adc_bits = int_list(v, where);
    else if (key == "num_sparse_features") s.num_sparse_features = int_field(doc, "num_sparse_features", "space");
    else if (key == "embedding_dim") s.embedding_dim = int_field(doc, "embedding_dim", "space");
    else if (key == "dense_input_dim") s.dense_input_dim = int_field(doc, "dense_input_dim", "space");
    else if (key == "embedding_rows") s.embedding_rows = int_field(doc, "embedding_rows", "space");
    else throw ParseError("space: unknown key '" + key + "'");
  }
  return s;
}

}  // namespace pimdse
