#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajagent/data.hpp"

namespace trajagent {

enum class ParamType { kInt, kFloat, kChoice };

using ParamValue = std::variant<std::int64_t, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

struct HyperParam {
  std::string name;
  ParamType type = ParamType::kInt;
  ParamValue default_value;
  double min = 0;  // numeric types, inclusive
  double max = 0;
  std::vector<std::string> choices;  // kChoice
  std::string doc;
  std::vector<ParamValue> grid;  // candidate values explored by searchers
};

struct OperatorSpec {
  int index = 0;  // 1..10
  std::string name;
  std::string description;
  std::vector<HyperParam> params;

  const HyperParam* find(const std::string& param) const;
};

struct AugmentPlan {
  std::vector<int> ops;                // applied left to right
  std::map<int, ParamMap> params;      // operator index -> overrides

  friend bool operator==(const AugmentPlan&, const AugmentPlan&) = default;
};

inline constexpr int kOperatorCount = 10;

namespace ops {
inline constexpr int kCrop = 1;
inline constexpr int kInsertUnvisited = 2;
inline constexpr int kInsertRandom = 3;
inline constexpr int kInsertFrequent = 4;
inline constexpr int kReplaceNearby = 5;
inline constexpr int kMask = 6;
inline constexpr int kSplit = 7;
inline constexpr int kSubsample = 8;
inline constexpr int kTimePerturb = 9;
inline constexpr int kMerge = 10;
}  // namespace ops

const std::vector<OperatorSpec>& list_operators();
// Throws Error(kUnknownOperator).
const OperatorSpec& operator_spec(int index);

// Validates overrides against the schema and fills defaults. Throws
// Error(kParamOutOfRange) naming the parameter.
ParamMap resolve_params(int index, const ParamMap& supplied);
// Parameter values under which the operator is the identity map.
ParamMap identity_params(int index);

void validate_plan(const AugmentPlan& plan);

Dataset apply_operator(const Dataset& ds, int index, const ParamMap& params, std::uint64_t seed);
// Applies ops left to right, operator i with sub-seed derive_seed(seed, i).
Dataset apply_plan(const Dataset& ds, const AugmentPlan& plan, std::uint64_t seed);

std::string to_text(const ParamValue& v);
nlohmann::json to_json(const ParamValue& v);

// Canonical persisted form {"ops":[...],"params":{"1":{...}}}.
nlohmann::json to_json(const AugmentPlan& plan);
AugmentPlan plan_from_json(const nlohmann::json& j);
// The two-line form the optim agent emits: an index list, then a map.
std::string to_text(const AugmentPlan& plan);
// Stable key for "already tried" bookkeeping.
std::string plan_key(const AugmentPlan& plan);

// Prompt sections: hyperparameters with docs, and operator meanings.
std::string describe_operator_params();
std::string describe_operator_meanings();

}  // namespace trajagent
