#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace trajagent {

// Reads Python/JSON-style literals as written by chat models: dicts with
// quoted, numeric or bare keys, lists, tuples, single or double quoted
// strings, True/False/None, numbers, and bare words (read as strings).
// Dict keys become strings.
std::optional<nlohmann::json> parse_literal_at(std::string_view text, std::size_t pos, std::size_t* end = nullptr);

struct LiteralMatch {
  nlohmann::json value;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// First '[' or '{' at or after `from` that starts a literal accepted by `accept`.
std::optional<LiteralMatch> find_literal(std::string_view text, const std::function<bool(const nlohmann::json&)>& accept,
                                         std::size_t from = 0);

}  // namespace trajagent
