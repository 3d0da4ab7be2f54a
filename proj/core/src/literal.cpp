#include "trajagent/literal.hpp"

#include <cctype>
#include <string>

#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

constexpr int kMaxDepth = 64;

class LiteralParser {
 public:
  LiteralParser(std::string_view s, std::size_t pos) : s_(s), pos_(pos) {}

  std::optional<json> value(int depth = 0) {
    if (depth > kMaxDepth) return std::nullopt;
    skip_ws();
    if (pos_ >= s_.size()) return std::nullopt;
    const char c = s_[pos_];
    if (c == '{') return dict(depth);
    if (c == '[') return list(depth, ']');
    if (c == '(') return list(depth, ')');
    if (c == '"' || c == '\'') return string();
    if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) {
      if (auto n = number()) return n;
    }
    return bare();
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static bool bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '+' ||
           static_cast<unsigned char>(c) >= 0x80;
  }

  std::optional<json> dict(int depth) {
    ++pos_;
    json out = json::object();
    if (eat('}')) return out;
    for (;;) {
      skip_ws();
      std::optional<std::string> key = dict_key();
      if (!key || !eat(':')) return std::nullopt;
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      out[*key] = std::move(*v);
      if (eat(',')) {
        if (eat('}')) return out;
        continue;
      }
      if (eat('}')) return out;
      return std::nullopt;
    }
  }

  std::optional<std::string> dict_key() {
    if (pos_ >= s_.size()) return std::nullopt;
    const char c = s_[pos_];
    if (c == '"' || c == '\'') {
      auto v = string();
      if (!v) return std::nullopt;
      return v->get<std::string>();
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && bare_char(s_[pos_])) ++pos_;
    if (pos_ == start) return std::nullopt;
    std::string key(s_.substr(start, pos_ - start));
    // 1.0 and 01 both name operator 1.
    if (auto d = parse_double(key); d && *d == static_cast<double>(static_cast<long long>(*d))) {
      if (key.find_first_not_of("+-0123456789.") == std::string::npos) key = std::to_string(static_cast<long long>(*d));
    }
    return key;
  }

  std::optional<json> list(int depth, char close) {
    ++pos_;
    json out = json::array();
    if (eat(close)) return out;
    for (;;) {
      auto v = value(depth + 1);
      if (!v) return std::nullopt;
      out.push_back(std::move(*v));
      if (eat(',')) {
        if (eat(close)) return out;
        continue;
      }
      if (eat(close)) return out;
      return std::nullopt;
    }
  }

  std::optional<json> string() {
    const char quote = s_[pos_++];
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != quote) {
      char c = s_[pos_++];
      if (c == '\\' && pos_ < s_.size()) {
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: c = e;
        }
      } else if (c == '\n') {
        return std::nullopt;
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) return std::nullopt;
    ++pos_;
    return json(out);
  }

  std::optional<json> number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    if (p < s_.size() && (s_[p] == '-' || s_[p] == '+')) ++p;
    bool is_float = false;
    bool digits = false;
    while (p < s_.size()) {
      const char c = s_[p];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits = true;
        ++p;
      } else if (c == '.' || c == 'e' || c == 'E') {
        is_float = true;
        ++p;
        if ((c == 'e' || c == 'E') && p < s_.size() && (s_[p] == '-' || s_[p] == '+')) ++p;
      } else {
        break;
      }
    }
    if (!digits) return std::nullopt;
    if (p < s_.size() && bare_char(s_[p])) return std::nullopt;  // e.g. 3rd, 1.0x
    const std::string_view tok = s_.substr(start, p - start);
    if (!is_float) {
      if (auto i = parse_int(tok[0] == '+' ? tok.substr(1) : tok)) {
        pos_ = p;
        return json(*i);
      }
    }
    if (auto d = parse_double(tok[0] == '+' ? tok.substr(1) : tok)) {
      pos_ = p;
      return json(*d);
    }
    return std::nullopt;
  }

  std::optional<json> bare() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && bare_char(s_[pos_])) ++pos_;
    if (pos_ == start) return std::nullopt;
    const std::string word(s_.substr(start, pos_ - start));
    if (word == "True" || word == "true") return json(true);
    if (word == "False" || word == "false") return json(false);
    if (word == "None" || word == "null") return json(nullptr);
    return json(word);
  }

  std::string_view s_;
  std::size_t pos_;
};

}  // namespace

std::optional<json> parse_literal_at(std::string_view text, std::size_t pos, std::size_t* end) {
  LiteralParser p(text, pos);
  auto v = p.value();
  if (v && end) *end = p.pos();
  return v;
}

std::optional<LiteralMatch> find_literal(std::string_view text, const std::function<bool(const json&)>& accept,
                                         std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] != '[' && text[i] != '{') continue;
    std::size_t end = 0;
    auto v = parse_literal_at(text, i, &end);
    if (v && accept(*v)) return LiteralMatch{std::move(*v), i, end};
  }
  return std::nullopt;
}

}  // namespace trajagent
