// SPDX-License-Identifier: Apache-2.0
#include "pimdse/design_space.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"

namespace pimdse {
namespace {

using Rng = std::mt19937_64;

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

int pick_index(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return static_cast<int>(d(rng));
}

// Uniform draw over the nonempty subsets of `items`.
template <typename T>
std::vector<T> nonempty_subset(const std::vector<T>& items, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  for (;;) {
    std::vector<T> out;
    for (const T& it : items) {
      if (coin(rng)) out.push_back(it);
    }
    if (!out.empty()) return out;
  }
}

bool contains(const std::vector<int>& menu, int v) {
  return std::find(menu.begin(), menu.end(), v) != menu.end();
}

bool contains_kind(const std::vector<OperatorKind>& menu, OperatorKind k) {
  return std::find(menu.begin(), menu.end(), k) != menu.end();
}

std::string ref_name(TensorRef r) {
  return (r.kind == TensorKind::Dense ? "d" : "s") + std::to_string(r.block);
}

// A different value from `menu`, or nullopt when the menu has no alternative.
std::optional<int> other_value(const std::vector<int>& menu, int current,
                               Rng& rng) {
  std::vector<int> alt;
  for (int v : menu) {
    if (v != current) alt.push_back(v);
  }
  if (alt.empty()) return std::nullopt;
  return pick(alt, rng);
}

std::vector<OpChoice>& branch_ops(BlockConfig& b, bool dense) {
  return dense ? b.dense_ops : b.sparse_ops;
}

bool has_kind(const std::vector<OpChoice>& ops, OperatorKind k) {
  return std::any_of(ops.begin(), ops.end(),
                     [k](const OpChoice& o) { return o.kind == k; });
}

std::optional<DesignPoint> swap_op(const DesignPoint& p, bool dense,
                                   const SpaceDescriptor& space, Rng& rng) {
  DesignPoint out = p;
  BlockConfig& b = out.model.blocks[pick_index(out.model.blocks.size(), rng)];
  auto& ops = branch_ops(b, dense);
  const auto& menu = dense ? space.dense_operators : space.sparse_operators;
  std::vector<OperatorKind> absent;
  for (OperatorKind k : menu) {
    if (!has_kind(ops, k)) absent.push_back(k);
  }
  if (ops.empty() || absent.empty()) return std::nullopt;
  ops[pick_index(ops.size(), rng)].kind = pick(absent, rng);
  return out;
}

std::optional<DesignPoint> change_dim(const DesignPoint& p, bool dense,
                                      const SpaceDescriptor& space, Rng& rng) {
  DesignPoint out = p;
  BlockConfig& b = out.model.blocks[pick_index(out.model.blocks.size(), rng)];
  int& dim = dense ? b.dim_d : b.dim_s;
  auto v = other_value(dense ? space.dim_d : space.dim_s, dim, rng);
  if (!v) return std::nullopt;
  dim = *v;
  return out;
}

std::optional<DesignPoint> rewire(const DesignPoint& p, Rng& rng) {
  DesignPoint out = p;
  BlockConfig& b = out.model.blocks[pick_index(out.model.blocks.size(), rng)];
  const bool dense = std::bernoulli_distribution(0.5)(rng);
  auto& inputs = dense ? b.dense_inputs : b.sparse_inputs;
  const auto pool = dense ? dense_pool(b.index) : sparse_pool(b.index);
  const TensorRef r = pick(pool, rng);
  auto it = std::find(inputs.begin(), inputs.end(), r);
  if (it == inputs.end()) {
    inputs.push_back(r);
  } else {
    if (inputs.size() == 1) return std::nullopt;
    inputs.erase(it);
  }
  return out;
}

std::optional<DesignPoint> toggle_interaction(const DesignPoint& p,
                                              const SpaceDescriptor& space,
                                              Rng& rng) {
  std::vector<OperatorKind> kinds;
  for (OperatorKind k : {OperatorKind::DP, OperatorKind::FM}) {
    if (contains_kind(space.dense_operators, k)) kinds.push_back(k);
  }
  if (contains_kind(space.sparse_operators, OperatorKind::DSI)) {
    kinds.push_back(OperatorKind::DSI);
  }
  if (kinds.empty()) return std::nullopt;
  DesignPoint out = p;
  BlockConfig& b = out.model.blocks[pick_index(out.model.blocks.size(), rng)];
  const OperatorKind k = pick(kinds, rng);
  auto& ops = branch_ops(b, produces_dense(k));
  auto it = std::find_if(ops.begin(), ops.end(),
                         [k](const OpChoice& o) { return o.kind == k; });
  if (it != ops.end()) {
    if (ops.size() == 1) return std::nullopt;
    ops.erase(it);
  } else {
    ops.push_back({k, pick(space.weight_bits, rng)});
  }
  return out;
}

std::optional<DesignPoint> change_bits(const DesignPoint& p,
                                       const SpaceDescriptor& space, Rng& rng) {
  DesignPoint out = p;
  BlockConfig& b = out.model.blocks[pick_index(out.model.blocks.size(), rng)];
  std::vector<int*> slots;
  for (auto& o : b.dense_ops) slots.push_back(&o.weight_bits);
  for (auto& o : b.sparse_ops) slots.push_back(&o.weight_bits);
  const int which = pick_index(slots.size() + 1, rng);
  if (which == static_cast<int>(slots.size())) {
    auto v = other_value(space.final_fc_bits, out.model.final_fc_bits, rng);
    if (!v) return std::nullopt;
    out.model.final_fc_bits = *v;
    return out;
  }
  auto v = other_value(space.weight_bits, *slots[which], rng);
  if (!v) return std::nullopt;
  *slots[which] = *v;
  return out;
}

std::optional<DesignPoint> change_reram(const DesignPoint& p,
                                        const SpaceDescriptor& space,
                                        Rng& rng) {
  DesignPoint out = p;
  ReRAMConfig& r = out.reram;
  std::optional<int> v;
  switch (pick_index(4, rng)) {
    case 0:
      if ((v = other_value(space.dac_bits, r.dac_bits, rng))) r.dac_bits = *v;
      break;
    case 1:
      if ((v = other_value(space.cell_bits, r.cell_bits, rng))) r.cell_bits = *v;
      break;
    case 2:
      if ((v = other_value(space.xbar_size, r.xbar_size, rng))) r.xbar_size = *v;
      break;
    default:
      if ((v = other_value(space.adc_bits, r.adc_bits, rng))) r.adc_bits = *v;
      break;
  }
  if (!v) return std::nullopt;
  return out;
}

}  // namespace

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::FC: return "FC";
    case OperatorKind::EFC: return "EFC";
    case OperatorKind::DP: return "DP";
    case OperatorKind::DSI: return "DSI";
    case OperatorKind::FM: return "FM";
  }
  return "?";
}

std::optional<OperatorKind> parse_operator(std::string_view name) {
  for (OperatorKind k : kAllOperators) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const SpaceDescriptor& default_space() {
  static const SpaceDescriptor space{};
  return space;
}

void check_space(const SpaceDescriptor& s) {
  auto fail = [](const std::string& m) { throw ValidationError("space: " + m); };
  if (s.num_blocks < 1) fail("num_blocks must be >= 1");
  if (s.dense_operators.empty()) fail("dense_operators is empty");
  if (s.sparse_operators.empty()) fail("sparse_operators is empty");
  for (OperatorKind k : s.dense_operators) {
    if (!produces_dense(k)) fail(std::string(to_string(k)) + " is not a dense operator");
  }
  for (OperatorKind k : s.sparse_operators) {
    if (produces_dense(k)) fail(std::string(to_string(k)) + " is not a sparse operator");
  }
  const std::pair<const char*, const std::vector<int>*> menus[] = {
      {"weight_bits", &s.weight_bits}, {"final_fc_bits", &s.final_fc_bits},
      {"dim_d", &s.dim_d},             {"dim_s", &s.dim_s},
      {"dac_bits", &s.dac_bits},       {"cell_bits", &s.cell_bits},
      {"xbar_size", &s.xbar_size},     {"adc_bits", &s.adc_bits}};
  for (const auto& [name, menu] : menus) {
    if (menu->empty()) fail(std::string(name) + " menu is empty");
    if (std::any_of(menu->begin(), menu->end(), [](int v) { return v <= 0; })) {
      fail(std::string(name) + " menu has non-positive entries");
    }
    if (std::set<int>(menu->begin(), menu->end()).size() != menu->size()) {
      fail(std::string(name) + " menu has duplicates");
    }
  }
  for (const auto* menu : {&s.weight_bits, &s.final_fc_bits}) {
    for (int b : *menu) {
      if (b != 4 && b != 8) fail("weight bits must be 4 or 8");
    }
  }
  for (int c : s.cell_bits) {
    if (c > 2) fail("cell_bits must be 1 or 2");
  }
  for (int d : s.dac_bits) {
    if (d > 2) fail("dac_bits must be 1 or 2");
  }
  if (s.num_sparse_features < 1 || s.embedding_dim < 1 || s.dense_input_dim < 1 ||
      s.embedding_rows < 1) {
    fail("workload shape fields must be >= 1");
  }
}

std::vector<TensorRef> dense_pool(int index) {
  std::vector<TensorRef> pool{{0, TensorKind::Dense}};
  for (int j = 1; j < index; ++j) {
    pool.push_back({j, TensorKind::Dense});
    pool.push_back({j, TensorKind::Sparse});
  }
  return pool;
}

std::vector<TensorRef> sparse_pool(int index) {
  std::vector<TensorRef> pool{{0, TensorKind::Sparse}};
  for (int j = 1; j < index; ++j) {
    pool.push_back({j, TensorKind::Dense});
    pool.push_back({j, TensorKind::Sparse});
  }
  return pool;
}

TensorShape tensor_shape(const ModelConfig& m, TensorRef ref) {
  if (ref.block == 0) {
    return ref.kind == TensorKind::Dense
               ? TensorShape{1, m.dense_input_dim}
               : TensorShape{m.num_sparse_features, m.embedding_dim};
  }
  if (ref.block < 0 || ref.block > static_cast<int>(m.blocks.size())) {
    throw ShapeMismatch("tensor reference to missing block " +
                        std::to_string(ref.block));
  }
  const BlockConfig& b = m.blocks[ref.block - 1];
  return ref.kind == TensorKind::Dense
             ? TensorShape{1, b.dim_d}
             : TensorShape{m.num_sparse_features, b.dim_s};
}

int dense_input_width(const ModelConfig& m, const BlockConfig& b) {
  long long w = 0;
  for (TensorRef r : b.dense_inputs) w += tensor_shape(m, r).size();
  return static_cast<int>(w);
}

int sparse_input_rows(const ModelConfig& m, const BlockConfig& b) {
  long long rows = 0;
  for (TensorRef r : b.sparse_inputs) {
    rows += (tensor_shape(m, r).size() + b.dim_s - 1) / b.dim_s;
  }
  return static_cast<int>(rows);
}

ValidationReport validate(const DesignPoint& p, const SpaceDescriptor& space) {
  ValidationReport rep;
  auto bad = [&rep](std::string msg) {
    rep.ok = false;
    rep.violations.push_back(std::move(msg));
  };
  const ModelConfig& m = p.model;
  if (static_cast<int>(m.blocks.size()) != space.num_blocks) {
    bad("model: expected " + std::to_string(space.num_blocks) + " blocks, got " +
        std::to_string(m.blocks.size()));
  }
  if (!contains(space.final_fc_bits, m.final_fc_bits)) {
    bad("model: final_fc_bits " + std::to_string(m.final_fc_bits) + " not in menu");
  }
  if (m.num_sparse_features != space.num_sparse_features ||
      m.embedding_dim != space.embedding_dim ||
      m.dense_input_dim != space.dense_input_dim ||
      m.embedding_rows != space.embedding_rows) {
    bad("model: workload shape differs from the space descriptor");
  }

  for (std::size_t pos = 0; pos < m.blocks.size(); ++pos) {
    const BlockConfig& b = m.blocks[pos];
    const std::string tag = "block " + std::to_string(pos + 1) + ": ";
    if (b.index != static_cast<int>(pos) + 1) {
      bad(tag + "index " + std::to_string(b.index) + " out of order");
    }
    for (bool dense : {true, false}) {
      const auto& ops = dense ? b.dense_ops : b.sparse_ops;
      const auto& menu = dense ? space.dense_operators : space.sparse_operators;
      const std::string branch = dense ? "dense" : "sparse";
      if (ops.empty()) bad(tag + branch + " branch empty");
      std::set<OperatorKind> seen;
      for (const OpChoice& o : ops) {
        const std::string name(to_string(o.kind));
        if (!contains_kind(menu, o.kind)) {
          bad(tag + name + " not allowed in " + branch + " branch");
        }
        if (!seen.insert(o.kind).second) {
          bad(tag + name + " repeated in " + branch + " branch");
        }
        if (!contains(space.weight_bits, o.weight_bits)) {
          bad(tag + name + " weight_bits " + std::to_string(o.weight_bits) +
              " not in menu");
        }
      }
      const auto& inputs = dense ? b.dense_inputs : b.sparse_inputs;
      const auto pool = dense ? dense_pool(b.index) : sparse_pool(b.index);
      if (inputs.empty()) bad(tag + branch + " inputs empty");
      std::set<TensorRef> uniq;
      for (TensorRef r : inputs) {
        if (std::find(pool.begin(), pool.end(), r) == pool.end()) {
          bad(tag + branch + " input " + ref_name(r) + " not in candidate pool");
        }
        if (!uniq.insert(r).second) {
          bad(tag + branch + " input " + ref_name(r) + " repeated");
        }
      }
    }
    if (!contains(space.dim_d, b.dim_d)) {
      bad(tag + "dim_d " + std::to_string(b.dim_d) + " not in menu");
    }
    if (!contains(space.dim_s, b.dim_s)) {
      bad(tag + "dim_s " + std::to_string(b.dim_s) + " not in menu");
    }
  }

  const ReRAMConfig& r = p.reram;
  if (!contains(space.dac_bits, r.dac_bits)) {
    bad("reram: dac_bits " + std::to_string(r.dac_bits) + " not in menu");
  }
  if (!contains(space.cell_bits, r.cell_bits)) {
    bad("reram: cell_bits " + std::to_string(r.cell_bits) + " not in menu");
  }
  if (!contains(space.xbar_size, r.xbar_size)) {
    bad("reram: xbar_size " + std::to_string(r.xbar_size) + " not in menu");
  }
  if (!contains(space.adc_bits, r.adc_bits)) {
    bad("reram: adc_bits " + std::to_string(r.adc_bits) + " not in menu");
  }
  if (!reram_feasible(r)) bad("reram: adc_bits < dac_bits + cell_bits");

  if (!p.point_id.empty() && p.point_id != sha256_hex(canonical_form(p))) {
    bad("point_id does not match content");
  }
  return rep;
}

void canonicalize(DesignPoint& p) {
  for (BlockConfig& b : p.model.blocks) {
    std::sort(b.dense_ops.begin(), b.dense_ops.end());
    std::sort(b.sparse_ops.begin(), b.sparse_ops.end());
    std::sort(b.dense_inputs.begin(), b.dense_inputs.end());
    std::sort(b.sparse_inputs.begin(), b.sparse_inputs.end());
  }
  p.point_id = sha256_hex(canonical_form(p));
}

DesignPoint sample_random(std::uint64_t seed, const SpaceDescriptor& space) {
  Rng rng(seed);
  DesignPoint p;
  ModelConfig& m = p.model;
  m.num_sparse_features = space.num_sparse_features;
  m.embedding_dim = space.embedding_dim;
  m.dense_input_dim = space.dense_input_dim;
  m.embedding_rows = space.embedding_rows;
  for (int i = 1; i <= space.num_blocks; ++i) {
    BlockConfig b;
    b.index = i;
    for (OperatorKind k : nonempty_subset(space.dense_operators, rng)) {
      b.dense_ops.push_back({k, pick(space.weight_bits, rng)});
    }
    for (OperatorKind k : nonempty_subset(space.sparse_operators, rng)) {
      b.sparse_ops.push_back({k, pick(space.weight_bits, rng)});
    }
    b.dense_inputs = nonempty_subset(dense_pool(i), rng);
    b.sparse_inputs = nonempty_subset(sparse_pool(i), rng);
    b.dim_d = pick(space.dim_d, rng);
    b.dim_s = pick(space.dim_s, rng);
    m.blocks.push_back(std::move(b));
  }
  m.final_fc_bits = pick(space.final_fc_bits, rng);

  std::vector<ReRAMConfig> feasible;
  for (int dac : space.dac_bits)
    for (int cell : space.cell_bits)
      for (int xbar : space.xbar_size)
        for (int adc : space.adc_bits) {
          ReRAMConfig r{dac, cell, xbar, adc};
          if (reram_feasible(r)) feasible.push_back(r);
        }
  if (feasible.empty()) {
    throw ValidationError("space: no ReRAM combination satisfies adc >= dac + cell");
  }
  p.reram = pick(feasible, rng);
  canonicalize(p);
  return p;
}

std::optional<DesignPoint> apply_action(const DesignPoint& p,
                                        MutationAction action,
                                        std::uint64_t seed,
                                        const SpaceDescriptor& space) {
  if (p.model.blocks.empty()) return std::nullopt;
  Rng rng(seed);
  std::optional<DesignPoint> out;
  switch (action) {
    case MutationAction::SwapDenseOp: out = swap_op(p, true, space, rng); break;
    case MutationAction::SwapSparseOp: out = swap_op(p, false, space, rng); break;
    case MutationAction::ChangeDimD: out = change_dim(p, true, space, rng); break;
    case MutationAction::ChangeDimS: out = change_dim(p, false, space, rng); break;
    case MutationAction::RewireConnection: out = rewire(p, rng); break;
    case MutationAction::ToggleInteractionOp:
      out = toggle_interaction(p, space, rng);
      break;
    case MutationAction::ChangeWeightBits: out = change_bits(p, space, rng); break;
    case MutationAction::ChangeReRAMField: out = change_reram(p, space, rng); break;
  }
  if (out) canonicalize(*out);
  return out;
}

DesignPoint mutate(const DesignPoint& point, std::uint64_t seed,
                   int num_mutations, const SpaceDescriptor& space) {
  if (num_mutations < 1) {
    throw std::invalid_argument("mutate: num_mutations must be >= 1");
  }
  DesignPoint cur = point;
  for (int step = 0; step < num_mutations; ++step) {
    for (int attempt = 0; attempt <= kMutationRetries; ++attempt) {
      Rng draw(derive_seed(seed, static_cast<std::uint64_t>(step),
                           static_cast<std::uint64_t>(attempt)));
      const auto action = static_cast<MutationAction>(
          std::uniform_int_distribution<int>(0, kNumMutationActions - 1)(draw));
      auto child = apply_action(cur, action, draw(), space);
      if (child && child->point_id != cur.point_id && validate(*child, space).ok) {
        cur = std::move(*child);
        break;
      }
    }
  }
  return cur;
}

Cardinality cardinality(const SpaceDescriptor& space) {
  using boost::multiprecision::cpp_int;
  check_space(space);
  auto op_choices = [&space](const std::vector<OperatorKind>& menu) {
    // Each operator is absent or present with one of |weight_bits| widths;
    // the all-absent configuration is excluded.
    cpp_int n = 1;
    for (std::size_t i = 0; i < menu.size(); ++i) n *= 1 + space.weight_bits.size();
    return n - 1;
  };
  const cpp_int dense_ops = op_choices(space.dense_operators);
  const cpp_int sparse_ops = op_choices(space.sparse_operators);
  const cpp_int dims = cpp_int(space.dim_d.size()) * space.dim_s.size();

  cpp_int total = 1;
  for (int i = 1; i <= space.num_blocks; ++i) {
    const cpp_int dense_subsets = (cpp_int(1) << dense_pool(i).size()) - 1;
    const cpp_int sparse_subsets = (cpp_int(1) << sparse_pool(i).size()) - 1;
    total *= dense_ops * sparse_ops * dims * dense_subsets * sparse_subsets;
  }
  total *= space.final_fc_bits.size();

  std::size_t reram = 0;
  for (int dac : space.dac_bits)
    for (int cell : space.cell_bits)
      for (std::size_t x = 0; x < space.xbar_size.size(); ++x)
        for (int adc : space.adc_bits) {
          if (adc >= dac + cell) ++reram;
        }
  total *= reram;

  std::ostringstream conv;
  conv << "per block i of N=" << space.num_blocks
       << ": nonempty operator subsets per branch with per-operator weight "
          "bits; dim_d x dim_s; dense and sparse branch inputs are each a "
          "nonempty subset of a (2i-1)-tensor pool (own-kind stem plus dense "
          "and sparse outputs of every earlier block); times final-FC bits; "
          "times feasible ReRAM combos (adc >= dac + cell)";
  return {total, conv.str()};
}

}  // namespace pimdse
