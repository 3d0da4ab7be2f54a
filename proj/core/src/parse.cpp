#include "trajagent/parse.hpp"

#include "trajagent/error.hpp"
#include "trajagent/literal.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

bool is_int_list(const json& j) {
  if (!j.is_array()) return false;
  for (const auto& x : j) {
    if (!x.is_number_integer()) return false;
  }
  return true;
}

int operator_key(const std::string& key) {
  if (auto i = parse_int(trim(key))) return static_cast<int>(*i);
  for (const auto& op : list_operators()) {
    if (iequals(trim(key), op.name)) return op.index;
  }
  throw Error(ErrorCode::kValidationFailure, "unknown operator key '" + key + "'");
}

ParamValue param_value(const json& v, const std::string& where) {
  if (v.is_number_integer()) return ParamValue(v.get<std::int64_t>());
  if (v.is_number()) return ParamValue(v.get<double>());
  if (v.is_string()) return ParamValue(v.get<std::string>());
  throw Error(ErrorCode::kValidationFailure, where + ": unsupported value " + v.dump());
}

}  // namespace

AugmentPlan parse_da_action(std::string_view text) {
  const auto list = find_literal(text, is_int_list);
  if (!list) throw Error(ErrorCode::kParseFailure, "no operator index list in reply");

  AugmentPlan plan;
  for (const auto& x : list->value) {
    const std::int64_t idx = x.get<std::int64_t>();
    if (idx < 1 || idx > kOperatorCount) {
      throw Error(ErrorCode::kValidationFailure, "operator index " + std::to_string(idx) + " out of range");
    }
    plan.ops.push_back(static_cast<int>(idx));
  }

  const auto map = find_literal(text, [](const json& j) { return j.is_object(); }, list->end);
  if (map) {
    for (const auto& [key, params] : map->value.items()) {
      const int op = operator_key(key);
      if (!params.is_object()) {
        throw Error(ErrorCode::kValidationFailure, "parameters for operator " + key + " must be a map");
      }
      ParamMap pm;
      for (const auto& [name, v] : params.items()) pm[name] = param_value(v, key + "." + name);
      if (!pm.empty()) plan.params[op] = std::move(pm);
    }
  }
  try {
    validate_plan(plan);
    for (const auto& [op, pm] : plan.params) plan.params[op] = resolve_params(op, pm);
  } catch (const Error& e) {
    throw Error(ErrorCode::kValidationFailure, e.detail());
  }
  return plan;
}

json parse_po_action(std::string_view text, const TrainerConfig& config) {
  const auto map = find_literal(text, [](const json& j) { return j.is_object() && !j.empty(); });
  if (!map) throw Error(ErrorCode::kParseFailure, "no hyperparameter map in reply");
  json out = json::object();
  for (const auto& [name, v] : map->value.items()) {
    const ConfigValue* current = config.find(name);
    if (!current) throw Error(ErrorCode::kValidationFailure, "unknown hyperparameter '" + name + "'");
    out[name] = to_json(coerce(v, current->type()));
  }
  return out;
}

std::string parse_task_name(std::string_view text, const std::vector<std::string>& known) {
  std::string_view t = trim(text);
  while (!t.empty() && std::string_view("\"'`*.").find(t.front()) != std::string_view::npos) t.remove_prefix(1);
  while (!t.empty() && std::string_view("\"'`*.").find(t.back()) != std::string_view::npos) t.remove_suffix(1);
  t = trim(t);
  if (t.empty()) throw Error(ErrorCode::kParseFailure, "empty task name");
  for (const auto& k : known) {
    if (t == k) return k;
  }
  for (const auto& k : known) {
    if (iequals(t, k)) return k;
  }
  throw Error(ErrorCode::kParseFailure, "'" + std::string(t.substr(0, 80)) + "' is not a known task");
}

std::vector<std::string> parse_location_list(std::string_view text) {
  const auto list = find_literal(text, [](const json& j) {
    if (!j.is_array() || j.empty()) return false;
    for (const auto& x : j) {
      if (!x.is_string() && !x.is_number_integer()) return false;
    }
    return true;
  });
  if (!list) throw Error(ErrorCode::kParseFailure, "no location list in reply");
  std::vector<std::string> out;
  for (const auto& x : list->value) out.push_back(x.is_string() ? x.get<std::string>() : std::to_string(x.get<std::int64_t>()));
  return out;
}

}  // namespace trajagent
