// SPDX-License-Identifier: Apache-2.0
#include "pimdse/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "pimdse/errors.hpp"
#include "pimdse/hashing.hpp"
#include "pimdse/log.hpp"

namespace pimdse {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double number(const std::string& tok, const char* what, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != tok.size() || !std::isfinite(v)) {
    throw ParseError(std::string("bad ") + what + " '" + tok + "'", line);
  }
  return v;
}

std::uint64_t id_bits(const DesignPoint& p) {
  const std::string id = p.point_id.empty() ? sha256_hex(canonical_form(p)) : p.point_id;
  return std::stoull(id.substr(0, 16), nullptr, 16);
}

}  // namespace

SurrogateTerms surrogate_terms(const DesignPoint& p, const SurrogateParams& sp) {
  SurrogateTerms t;
  for (const BlockConfig& b : p.model.blocks) {
    t.total_dense_width += b.dim_d;
    for (const OpChoice& o : b.dense_ops) {
      if (o.kind == OperatorKind::DP || o.kind == OperatorKind::FM) ++t.interactions;
    }
  }
  if (!p.model.blocks.empty()) {
    for (const OpChoice& o : p.model.blocks.front().dense_ops) {
      if (o.kind == OperatorKind::FC && o.weight_bits == 4) ++t.low_bit_boundary_fcs;
    }
  }
  if (p.model.final_fc_bits == 4) ++t.low_bit_boundary_fcs;
  const std::uint64_t h = derive_seed(sp.seed, id_bits(p));
  t.noise = static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;
  return t;
}

EvalResult surrogate_loss(const DesignPoint& p, const SurrogateParams& sp) {
  const SurrogateTerms t = surrogate_terms(p, sp);
  double loss = sp.base_loss;
  if (t.total_dense_width > 0) {
    loss -= sp.capacity_weight * std::log2(static_cast<double>(t.total_dense_width));
  }
  loss -= sp.interaction_bonus * std::min(t.interactions, sp.interaction_cap);
  loss += sp.low_bit_penalty * t.low_bit_boundary_fcs;
  loss += sp.noise_scale * t.noise;
  EvalResult r;
  r.log_loss = std::max(loss, kMinLoss);
  r.source = EvalSource::Surrogate;
  return r;
}

nlohmann::json to_json(const SurrogateParams& sp) {
  return {{"base_loss", sp.base_loss},
          {"capacity_weight", sp.capacity_weight},
          {"interaction_bonus", sp.interaction_bonus},
          {"interaction_cap", sp.interaction_cap},
          {"low_bit_penalty", sp.low_bit_penalty},
          {"noise_scale", sp.noise_scale},
          {"seed", sp.seed}};
}

SurrogateParams surrogate_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("surrogate: expected an object");
  SurrogateParams sp;
  for (const auto& [k, v] : doc.items()) {
    const bool num = v.is_number();
    if (k == "interaction_cap" || k == "seed") {
      if (!v.is_number_integer()) throw ParseError("surrogate." + k + ": expected an integer");
      if (k == "seed") sp.seed = v.get<std::uint64_t>();
      else sp.interaction_cap = v.get<int>();
      continue;
    }
    if (!num) throw ParseError("surrogate." + k + ": expected a number");
    if (k == "base_loss") sp.base_loss = v.get<double>();
    else if (k == "capacity_weight") sp.capacity_weight = v.get<double>();
    else if (k == "interaction_bonus") sp.interaction_bonus = v.get<double>();
    else if (k == "low_bit_penalty") sp.low_bit_penalty = v.get<double>();
    else if (k == "noise_scale") sp.noise_scale = v.get<double>();
    else throw ParseError("surrogate: unknown key '" + k + "'");
  }
  if (sp.noise_scale < 0) throw ValidationError("surrogate: noise_scale must be >= 0");
  if (sp.interaction_cap < 0) throw ValidationError("surrogate: interaction_cap must be >= 0");
  return sp;
}

ExternalLosses parse_external(std::istream& in, const std::set<std::string>* known) {
  ExternalLosses out;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells.size() < 2 || cells.size() > 3 || cells[0] != "point_id" || cells[1] != "log_loss" ||
          (cells.size() == 3 && cells[2] != "auc")) {
        throw ParseError("expected header point_id,log_loss[,auc]", lineno);
      }
      header = true;
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " fields", lineno);
    }
    if (cells[0].empty()) throw ParseError("empty point_id", lineno);
    EvalResult r;
    r.source = EvalSource::External;
    r.log_loss = number(cells[1], "log_loss", lineno);
    if (!(r.log_loss > 0)) throw ParseError("log_loss must be > 0", lineno);
    if (columns == 3 && !cells[2].empty()) {
      const double auc = number(cells[2], "auc", lineno);
      if (!(auc > 0 && auc < 1)) throw ParseError("auc must be in (0, 1)", lineno);
      r.auc = auc;
    }
    if (out.count(cells[0])) {
      log::warn("line ", lineno, ": duplicate point_id ", cells[0], ", keeping the last row");
    }
    if (known && !known->count(cells[0])) {
      log::warn("line ", lineno, ": unknown point_id ", cells[0]);
    }
    out[cells[0]] = r;
  }
  return out;
}

ExternalLosses ingest_external(const std::string& path, const std::set<std::string>* known) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return parse_external(in, known);
}

Evaluator::Evaluator(SurrogateParams sp, ExternalLosses external)
    : sp_(sp), external_(std::move(external)) {}

EvalResult Evaluator::evaluate(const DesignPoint& p) const {
  if (auto it = external_.find(p.point_id); it != external_.end()) return it->second;
  return surrogate_loss(p, sp_);
}

}  // namespace pimdse
