// SPDX-License-Identifier: Apache-2.0
//
// Model-quality signal for the search: a deterministic surrogate loss, with
// optional externally measured losses taking precedence.
#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>

#include "pimdse/design_space.hpp"

namespace pimdse {

enum class EvalSource { Surrogate, External };

struct EvalResult {
  double log_loss = 0;
  std::optional<double> auc;
  EvalSource source = EvalSource::Surrogate;
  bool operator==(const EvalResult&) const = default;
};

struct SurrogateParams {
  double base_loss = 0.47;
  double capacity_weight = 0.002;    // per doubling of total dense width
  double interaction_bonus = 0.002;  // per DP or FM operator
  int interaction_cap = 4;
  double low_bit_penalty = 0.003;    // per 4-bit first-block FC / final FC
  double noise_scale = 0.001;
  std::uint64_t seed = 0;
};

inline constexpr double kMinLoss = 0.01;

/// Terms of the surrogate, exposed for tests and reports.
struct SurrogateTerms {
  long long total_dense_width = 0;
  int interactions = 0;  // DP + FM count before capping
  int low_bit_boundary_fcs = 0;
  double noise = 0;      // in [-0.5, 0.5)
};

SurrogateTerms surrogate_terms(const DesignPoint& point, const SurrogateParams& sp);
EvalResult surrogate_loss(const DesignPoint& point, const SurrogateParams& sp);

nlohmann::json to_json(const SurrogateParams& sp);
SurrogateParams surrogate_from_json(const nlohmann::json& doc);

using ExternalLosses = std::map<std::string, EvalResult>;

/// CSV with header "point_id,log_loss" or "point_id,log_loss,auc". Duplicate
/// ids keep the last row and log a warning; ids missing from `known` (when
/// given) log a warning. Throws ParseError carrying the line number.
ExternalLosses parse_external(std::istream& in, const std::set<std::string>* known = nullptr);
ExternalLosses ingest_external(const std::string& path,
                               const std::set<std::string>* known = nullptr);

class Evaluator {
 public:
  explicit Evaluator(SurrogateParams sp = {}, ExternalLosses external = {});

  /// External entry when present, surrogate otherwise.
  EvalResult evaluate(const DesignPoint& point) const;
  const SurrogateParams& params() const { return sp_; }

 private:
  SurrogateParams sp_;
  ExternalLosses external_;
};

}  // namespace pimdse
