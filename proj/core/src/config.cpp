#include "trajagent/config.hpp"

#include <cctype>
#include <cmath>

#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

class ValueParser {
 public:
  explicit ValueParser(std::string_view text) : s_(text) {}

  ConfigValue parse_one() {
    skip_ws();
    if (pos_ >= s_.size()) fail("expected a value");
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') return parse_list();
    if (starts_with("true")) {
      pos_ += 4;
      return ConfigValue(true);
    }
    if (starts_with("false")) {
      pos_ += 5;
      return ConfigValue(false);
    }
    return parse_number();
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= s_.size(); }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kConfigSyntax, what + " at column " + std::to_string(pos_ + 1) + " in '" + std::string(s_) + "'");
  }

  bool starts_with(std::string_view word) const {
    if (s_.substr(pos_, word.size()) != word) return false;
    const std::size_t end = pos_ + word.size();
    return end >= s_.size() || !(std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_');
  }

  ConfigValue parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return ConfigValue(std::move(out));
  }

  ConfigValue parse_list() {
    ++pos_;
    std::vector<ConfigValue> items;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return ConfigValue(std::move(items));
    }
    for (;;) {
      items.push_back(parse_one());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated list");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        break;
      }
      fail("expected ',' or ']'");
    }
    return ConfigValue(std::move(items));
  }

  ConfigValue parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+') {
        ++pos_;
      } else {
        break;
      }
    }
    const std::string_view tok = s_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value");
    const bool looks_float = tok.find_first_of(".eEn") != std::string_view::npos;
    if (!looks_float) {
      if (auto i = parse_int(tok)) return ConfigValue(*i);
    } else if (auto d = parse_double(tok)) {
      return ConfigValue(*d);
    }
    fail("bad literal '" + std::string(tok) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

bool valid_name(std::string_view name) {
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  }
  return true;
}

std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

double ConfigValue::as_number() const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&data)) return *d;
  throw Error(ErrorCode::kValidationError, "config value " + format_value(*this) + " is not numeric");
}

std::string_view to_string(ConfigType type) {
  switch (type) {
    case ConfigType::kBool: return "bool";
    case ConfigType::kInt: return "int";
    case ConfigType::kFloat: return "float";
    case ConfigType::kString: return "string";
    case ConfigType::kList: return "list";
  }
  return "unknown";
}

std::string format_value(const ConfigValue& v) {
  switch (v.type()) {
    case ConfigType::kBool: return std::get<bool>(v.data) ? "true" : "false";
    case ConfigType::kInt: return std::to_string(std::get<std::int64_t>(v.data));
    case ConfigType::kFloat: return format_float_literal(std::get<double>(v.data));
    case ConfigType::kString: return escape_string(std::get<std::string>(v.data));
    case ConfigType::kList: {
      std::string out = "[";
      const auto& items = std::get<std::vector<ConfigValue>>(v.data);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += format_value(items[i]);
      }
      return out + "]";
    }
  }
  return {};
}

ConfigValue parse_value(std::string_view text) {
  ValueParser p(text);
  ConfigValue v = p.parse_one();
  p.skip_ws();
  if (!p.done()) throw Error(ErrorCode::kConfigSyntax, "trailing text after value in '" + std::string(text) + "'");
  return v;
}

json to_json(const ConfigValue& v) {
  switch (v.type()) {
    case ConfigType::kBool: return std::get<bool>(v.data);
    case ConfigType::kInt: return std::get<std::int64_t>(v.data);
    case ConfigType::kFloat: return std::get<double>(v.data);
    case ConfigType::kString: return std::get<std::string>(v.data);
    case ConfigType::kList: {
      json arr = json::array();
      for (const auto& item : std::get<std::vector<ConfigValue>>(v.data)) arr.push_back(to_json(item));
      return arr;
    }
  }
  return nullptr;
}

ConfigValue value_from_json(const json& j) {
  if (j.is_boolean()) return ConfigValue(j.get<bool>());
  if (j.is_number_integer()) return ConfigValue(j.get<std::int64_t>());
  if (j.is_number()) return ConfigValue(j.get<double>());
  if (j.is_string()) return ConfigValue(j.get<std::string>());
  if (j.is_array()) {
    std::vector<ConfigValue> items;
    for (const auto& item : j) items.push_back(value_from_json(item));
    return ConfigValue(std::move(items));
  }
  throw Error(ErrorCode::kValidationFailure, "unsupported config value " + j.dump());
}

ConfigValue coerce(const json& j, ConfigType type) {
  auto fail = [&]() -> ConfigValue {
    throw Error(ErrorCode::kValidationFailure, "cannot use " + j.dump() + " as " + std::string(to_string(type)));
  };
  switch (type) {
    case ConfigType::kBool:
      if (j.is_boolean()) return ConfigValue(j.get<bool>());
      if (j.is_string()) {
        const std::string s = to_lower(j.get<std::string>());
        if (s == "true") return ConfigValue(true);
        if (s == "false") return ConfigValue(false);
      }
      if (j.is_number_integer() && (j.get<std::int64_t>() == 0 || j.get<std::int64_t>() == 1)) {
        return ConfigValue(j.get<std::int64_t>() == 1);
      }
      return fail();
    case ConfigType::kInt:
      if (j.is_number_integer()) return ConfigValue(j.get<std::int64_t>());
      if (j.is_number_float()) {
        const double d = j.get<double>();
        if (std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9e15) return ConfigValue(static_cast<std::int64_t>(d));
      }
      return fail();
    case ConfigType::kFloat:
      if (j.is_number()) return ConfigValue(j.get<double>());
      return fail();
    case ConfigType::kString:
      if (j.is_string()) return ConfigValue(j.get<std::string>());
      return fail();
    case ConfigType::kList:
      if (j.is_array()) return value_from_json(j);
      return fail();
  }
  return fail();
}

TrainerConfig TrainerConfig::parse(std::string_view text, std::string source_path) {
  TrainerConfig cfg;
  cfg.source_path_ = std::move(source_path);
  cfg.trailing_newline_ = text.empty() || text.back() == '\n';
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  if (text.empty() && cfg.trailing_newline_) return cfg;

  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    ConfigLine line;
    const std::string_view body = trim(raw);
    if (body.empty()) {
      line.kind = ConfigLine::Kind::kBlank;
      line.raw = raw;
    } else if (body.front() == '#') {
      line.kind = ConfigLine::Kind::kComment;
      line.raw = raw;
    } else {
      const auto eq = raw.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::kConfigSyntax, "line " + std::to_string(line_no) + ": expected 'name = value'");
      }
      line.kind = ConfigLine::Kind::kEntry;
      line.entry.name = std::string(trim(std::string_view(raw).substr(0, eq)));
      if (!valid_name(line.entry.name)) {
        throw Error(ErrorCode::kConfigSyntax, "line " + std::to_string(line_no) + ": bad name '" + line.entry.name + "'");
      }
      const std::string_view rest = std::string_view(raw).substr(eq + 1);
      ValueParser p(rest);
      try {
        line.entry.value = p.parse_one();
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfigSyntax, "line " + std::to_string(line_no) + ": " + e.detail());
      }
      p.skip_ws();
      std::string_view tail = rest.substr(p.pos());
      if (!tail.empty()) {
        if (tail.front() != '#') {
          throw Error(ErrorCode::kConfigSyntax, "line " + std::to_string(line_no) + ": unexpected text after value");
        }
        tail.remove_prefix(1);
        if (!tail.empty() && tail.front() == ' ') tail.remove_prefix(1);
        line.entry.comment = std::string(tail);
      }
      if (cfg.find(line.entry.name)) {
        throw Error(ErrorCode::kConfigSyntax, "line " + std::to_string(line_no) + ": duplicate name '" + line.entry.name + "'");
      }
    }
    cfg.lines_.push_back(std::move(line));
  }
  return cfg;
}

TrainerConfig TrainerConfig::load(const std::string& path) { return parse(read_file(path), path); }

std::string TrainerConfig::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    const auto& line = lines_[i];
    if (line.kind == ConfigLine::Kind::kEntry) {
      out += line.entry.name + " = " + format_value(line.entry.value);
      if (!line.entry.comment.empty()) out += "  # " + line.entry.comment;
    } else {
      out += line.raw;
    }
    if (i + 1 < lines_.size() || trailing_newline_) out += '\n';
  }
  return out;
}

void TrainerConfig::save(const std::string& path) const { write_file_atomic(path, serialize()); }

std::vector<ConfigEntry> TrainerConfig::entries() const {
  std::vector<ConfigEntry> out;
  for (const auto& l : lines_) {
    if (l.kind == ConfigLine::Kind::kEntry) out.push_back(l.entry);
  }
  return out;
}

const ConfigValue* TrainerConfig::find(std::string_view name) const {
  for (const auto& l : lines_) {
    if (l.kind == ConfigLine::Kind::kEntry && l.entry.name == name) return &l.entry.value;
  }
  return nullptr;
}

ConfigEntry* TrainerConfig::find_mut(std::string_view name) {
  for (auto& l : lines_) {
    if (l.kind == ConfigLine::Kind::kEntry && l.entry.name == name) return &l.entry;
  }
  return nullptr;
}

const ConfigValue& TrainerConfig::get(std::string_view name) const {
  if (const auto* v = find(name)) return *v;
  throw Error(ErrorCode::kConfigMissing, std::string(name));
}

std::int64_t TrainerConfig::get_int(std::string_view name) const {
  const auto& v = get(name);
  if (const auto* i = std::get_if<std::int64_t>(&v.data)) return *i;
  throw Error(ErrorCode::kValidationError, std::string(name) + " must be an int");
}

double TrainerConfig::get_float(std::string_view name) const { return get(name).as_number(); }

bool TrainerConfig::get_bool(std::string_view name) const {
  const auto& v = get(name);
  if (const auto* b = std::get_if<bool>(&v.data)) return *b;
  throw Error(ErrorCode::kValidationError, std::string(name) + " must be a bool");
}

std::string TrainerConfig::get_string(std::string_view name) const {
  const auto& v = get(name);
  if (const auto* s = std::get_if<std::string>(&v.data)) return *s;
  throw Error(ErrorCode::kValidationError, std::string(name) + " must be a string");
}

void TrainerConfig::set(std::string_view name, const ConfigValue& value) {
  ConfigEntry* e = find_mut(name);
  if (!e) throw Error(ErrorCode::kConfigMissing, std::string(name));
  e->value = coerce(to_json(value), e->value.type());
}

void TrainerConfig::add(ConfigEntry entry) {
  if (!valid_name(entry.name)) throw Error(ErrorCode::kConfigSyntax, "bad name '" + entry.name + "'");
  if (find(entry.name)) throw Error(ErrorCode::kConfigSyntax, "duplicate name '" + entry.name + "'");
  ConfigLine line;
  line.kind = ConfigLine::Kind::kEntry;
  line.entry = std::move(entry);
  lines_.push_back(std::move(line));
}

json TrainerConfig::values_json() const {
  json out = json::object();
  for (const auto& l : lines_) {
    if (l.kind == ConfigLine::Kind::kEntry) out[l.entry.name] = to_json(l.entry.value);
  }
  return out;
}

void TrainerConfig::apply(const json& values) {
  if (!values.is_object()) throw Error(ErrorCode::kValidationFailure, "config update must be a map");
  // Validate everything first so a bad entry leaves the config untouched.
  std::vector<std::pair<ConfigEntry*, ConfigValue>> updates;
  for (const auto& [name, value] : values.items()) {
    ConfigEntry* e = find_mut(name);
    if (!e) throw Error(ErrorCode::kValidationFailure, "unknown hyperparameter '" + name + "'");
    updates.emplace_back(e, coerce(value, e->value.type()));
  }
  for (auto& [e, v] : updates) e->value = std::move(v);
}

SearchSpace TrainerConfig::search_space() const {
  SearchSpace space;
  for (const auto& l : lines_) {
    if (l.kind != ConfigLine::Kind::kEntry) continue;
    const auto& c = l.entry.comment;
    const auto at = c.find("choices:");
    if (at == std::string::npos) continue;
    const auto open = c.find('[', at);
    if (open == std::string::npos) continue;
    int depth = 0;
    std::size_t close = open;
    for (; close < c.size(); ++close) {
      if (c[close] == '[') ++depth;
      if (c[close] == ']' && --depth == 0) break;
    }
    if (close >= c.size()) continue;
    ConfigValue list = parse_value(std::string_view(c).substr(open, close - open + 1));
    std::vector<ConfigValue> choices;
    for (const auto& item : std::get<std::vector<ConfigValue>>(list.data)) {
      choices.push_back(coerce(to_json(item), l.entry.value.type()));
    }
    if (!choices.empty()) space.emplace_back(l.entry.name, std::move(choices));
  }
  return space;
}

std::string config_key(const TrainerConfig& config) { return config.values_json().dump(); }

}  // namespace trajagent
