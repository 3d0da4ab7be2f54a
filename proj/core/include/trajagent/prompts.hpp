#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "trajagent/llm.hpp"

namespace trajagent {

// Slots are written ${NAME} in template text.
struct PromptTemplate {
  std::string name;
  std::string text;
};

namespace templates {
inline constexpr std::string_view kUnderstand = "understand";
inline constexpr std::string_view kPoThink = "po_think";
inline constexpr std::string_view kPoAction = "po_action";
inline constexpr std::string_view kDaThink = "da_think";
inline constexpr std::string_view kDaAction = "da_action";
inline constexpr std::string_view kReflect = "reflect";
inline constexpr std::string_view kPredict = "predict";
}  // namespace templates

// Throws Error(kNotFound).
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> template_names();
// Slot names in order of first appearance.
std::vector<std::string> slots_of(const PromptTemplate& tmpl);

inline constexpr std::size_t kDefaultMemoryBudget = 8000;

// Text slots are substituted verbatim. List slots (MEMORY) are joined one
// entry per line, keeping only the newest entries that fit the budget.
struct PromptSlots {
  std::map<std::string, std::string> text;
  std::map<std::string, std::vector<std::string>> lists;
};

std::string render_list(const std::vector<std::string>& entries, std::size_t budget);

// Returns one user message, preceded by a system message carrying `notes`
// when any are given. Throws Error(kUnboundSlot).
std::vector<ChatMessage> render(const PromptTemplate& tmpl, const PromptSlots& slots,
                                const std::vector<std::string>& notes = {},
                                std::size_t memory_budget = kDefaultMemoryBudget);

}  // namespace trajagent
