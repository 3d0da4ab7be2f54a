#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajagent/augment.hpp"
#include "trajagent/config.hpp"

namespace trajagent {

// Parsers for model replies. Each returns a value or throws
// Error(kParseFailure) when nothing usable is found, or
// Error(kValidationFailure) when the reply is well formed but invalid.

// First integer list gives the operator order; the first map after it
// holds per-operator parameters (keys: index or operator name).
AugmentPlan parse_da_action(std::string_view text);

// First map literal; keys must name entries of `config`, values are coerced
// to the entry types. Returns name -> value.
nlohmann::json parse_po_action(std::string_view text, const TrainerConfig& config);

// Exact, then case-insensitive match of the trimmed reply.
std::string parse_task_name(std::string_view text, const std::vector<std::string>& known);

// First list of location ids (strings or integers) in the reply.
std::vector<std::string> parse_location_list(std::string_view text);

}  // namespace trajagent
