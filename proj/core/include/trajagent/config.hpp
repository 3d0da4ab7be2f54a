#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajagent {

enum class ConfigType { kBool, kInt, kFloat, kString, kList };

struct ConfigValue {
  std::variant<bool, std::int64_t, double, std::string, std::vector<ConfigValue>> data;

  ConfigValue() : data(std::int64_t{0}) {}
  ConfigValue(bool v) : data(v) {}
  ConfigValue(int v) : data(std::int64_t{v}) {}
  ConfigValue(std::int64_t v) : data(v) {}
  ConfigValue(double v) : data(v) {}
  ConfigValue(const char* v) : data(std::string(v)) {}
  ConfigValue(std::string v) : data(std::move(v)) {}
  ConfigValue(std::vector<ConfigValue> v) : data(std::move(v)) {}

  ConfigType type() const { return static_cast<ConfigType>(data.index()); }
  // Numeric view of int/float values; throws for other types.
  double as_number() const;

  friend bool operator==(const ConfigValue&, const ConfigValue&) = default;
};

std::string_view to_string(ConfigType type);

// Canonical literal: true/false, 42, 0.5, "text", [1, 2].
std::string format_value(const ConfigValue& v);
// Parses one literal; throws Error(kConfigSyntax).
ConfigValue parse_value(std::string_view text);

nlohmann::json to_json(const ConfigValue& v);
ConfigValue value_from_json(const nlohmann::json& j);
// Converts a JSON value to `type`, allowing int->float, integral float->int
// and "true"/"false" strings for bools. Throws Error(kValidationFailure).
ConfigValue coerce(const nlohmann::json& j, ConfigType type);

struct ConfigEntry {
  std::string name;
  ConfigValue value;
  std::string comment;

  friend bool operator==(const ConfigEntry&, const ConfigEntry&) = default;
};

struct ConfigLine {
  enum class Kind { kBlank, kComment, kEntry };
  Kind kind = Kind::kBlank;
  std::string raw;  // verbatim text for blank and comment lines
  ConfigEntry entry;

  friend bool operator==(const ConfigLine&, const ConfigLine&) = default;
};

using SearchSpace = std::vector<std::pair<std::string, std::vector<ConfigValue>>>;

// Commented hyperparameter file. Entry lines read `name = value  # comment`;
// blank lines and full-line `#` comments are kept verbatim.
class TrainerConfig {
 public:
  TrainerConfig() = default;

  static TrainerConfig parse(std::string_view text, std::string source_path = {});
  static TrainerConfig load(const std::string& path);
  std::string serialize() const;
  void save(const std::string& path) const;

  const std::vector<ConfigLine>& lines() const { return lines_; }
  std::vector<ConfigEntry> entries() const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  const ConfigValue* find(std::string_view name) const;

  // Typed getters throw Error(kConfigMissing) for absent names and
  // Error(kValidationError) for a type mismatch.
  const ConfigValue& get(std::string_view name) const;
  std::int64_t get_int(std::string_view name) const;
  double get_float(std::string_view name) const;
  bool get_bool(std::string_view name) const;
  std::string get_string(std::string_view name) const;

  // Replaces the value of an existing entry, keeping its comment and type.
  void set(std::string_view name, const ConfigValue& value);
  // Appends an entry.
  void add(ConfigEntry entry);

  // name -> value object.
  nlohmann::json values_json() const;
  // Applies a name -> value map, coercing each value to the entry's type.
  // Unknown names or uncoercible values throw Error(kValidationFailure).
  void apply(const nlohmann::json& values);

  // Candidate values declared in entry comments as `choices: [...]`.
  SearchSpace search_space() const;

  const std::string& source_path() const { return source_path_; }

  friend bool operator==(const TrainerConfig& a, const TrainerConfig& b) { return a.lines_ == b.lines_; }

 private:
  ConfigEntry* find_mut(std::string_view name);

  std::vector<ConfigLine> lines_;
  bool trailing_newline_ = true;
  std::string source_path_;
};

// Stable key for "already tried" bookkeeping.
std::string config_key(const TrainerConfig& config);

}  // namespace trajagent
