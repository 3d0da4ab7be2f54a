#include "trajagent/prompts.hpp"

#include <algorithm>

#include "trajagent/error.hpp"

namespace trajagent {

namespace {

const std::vector<PromptTemplate>& catalog() {
  static const std::vector<PromptTemplate> kTemplates = {
      {std::string(templates::kUnderstand),
       "The description of each task is in TASK_DESCRIPTION.\n"
       "Please parse out the task name the sentence aims to address in RAW_INSTRUCT.\n"
       "1. The task name should match the key in the TASK_DESCRIPTION.\n"
       "2. Please only output the task name.Do not output other contents.\n"
       "\n"
       "<TASK_DESCRIPTION>\n"
       "${TASK_DESCRIPTION}\n"
       "\n"
       "<RAW_INSTRUCT>\n"
       "${RAW_INSTRUCT}\n"},

      {std::string(templates::kPoThink),
       "Please select a combination of hyperparameters for the model in CONFIG HYPERPARAMETERS that gets a high "
       "score. Base the choice on what each hyperparameter does, the characteristics of the input data, the tuning "
       "principles and the memory of earlier trials. You should solve the task with interleaving Thought, Action and "
       "Observation steps.\n"
       "\n"
       "<CHARACTERISTICS OF INPUT DATA>\n"
       "${CHARACTERISTICS_OF_INPUT_DATA}\n"
       "\n"
       "<CONFIG HYPERPARAMETERS>\n"
       "${CONFIG_HYPERPARAMETERS}\n"
       "\n"
       "<TUNING PRINCIPLES>\n"
       "${TUNING_PRINCIPLES}\n"
       "\n"
       "<MEMORY>:\n"
       "${MEMORY}\n"
       "\n"
       "<SCRATCHPAD>:\n"
       "${SCRATCHPAD}\n"
       "\n"
       "In the Thought step, reason about which combination of hyperparameters will score higher. Consider:\n"
       "1. Which hyperparameter values scored well in MEMORY.\n"
       "2. A local grid search around the best combinations in MEMORY.\n"
       "3. Stopping or reversing an adjustment when the score decreases.\n"
       "Learn from MEMORY first, then plan the action step. Please use the sentence structure "
       "'Firstly... Then... Lastly'.\n"
       "\n"
       "Thought:\n"},

      {std::string(templates::kPoAction),
       "<CONFIG HYPERPARAMETERS>\n"
       "${CONFIG_HYPERPARAMETERS}\n"
       "\n"
       "<SCRATCHPAD>:\n"
       "${SCRATCHPAD}\n"
       "\n"
       "In the Action step, follow the Thought step in SCRATCHPAD and give a dict {hyperparameter name: "
       "hyperparameter value}. Names must be the config names in CONFIG HYPERPARAMETERS and each value must have "
       "the same type as the value there. Do not add comments to the values.\n"
       "\n"
       "Action:\n"},

      {std::string(templates::kDaThink),
       "<TASK>\n"
       "Please:\n"
       "1. Select augmentation operators and an order in which to apply them to the training trajectories. Base "
       "the selection and order on MEANING OF OPERATORS, CHARACTERISTICS OF INPUT DATA and MEMORY to get a high "
       "score.\n"
       "2. Select the hyperparameters of each chosen operator from CONFIG HYPERPARAMETERS.\n"
       "You should solve the task with interleaving Thought, Action and Observation steps.\n"
       "\n"
       "<CHARACTERISTICS OF INPUT DATA>\n"
       "${CHARACTERISTICS_OF_INPUT_DATA}\n"
       "\n"
       "<CONFIG HYPERPARAMETERS>\n"
       "${CONFIG_HYPERPARAMETERS}\n"
       "\n"
       "<MEANING OF OPERATORS>\n"
       "${MEANING_OF_OPERATORS}\n"
       "\n"
       "<MEMORY>:\n"
       "${MEMORY}\n"
       "\n"
       "<SCRATCHPAD>:\n"
       "${SCRATCHPAD}\n"
       "\n"
       "In the Thought step, reason about which operators and hyperparameters will score higher. Consider:\n"
       "1. The effect of adding or removing an operator at a given position.\n"
       "2. What the higher scoring index lists in MEMORY have in common. Do not repeat an index list from MEMORY "
       "that scored lower than ${BEST_SCORE}.\n"
       "3. How to adjust the hyperparameters of the selected operators given the data and MEMORY.\n"
       "4. Stopping or reversing an adjustment when the score decreases.\n"
       "Learn from MEMORY first, then plan the action step. Please use the sentence structure "
       "'Firstly... Then... Lastly'.\n"
       "\n"
       "Thought:\n"},

      {std::string(templates::kDaAction),
       "<CONFIG HYPERPARAMETERS>\n"
       "${CONFIG_HYPERPARAMETERS}\n"
       "\n"
       "<SCRATCHPAD>:\n"
       "${SCRATCHPAD}\n"
       "\n"
       "In the Action step, follow the Thought step in SCRATCHPAD and return a list and a dictionary.\n"
       "The list holds the indices of the operators to apply, in order, from ${OPERATOR_INDEX}.\n"
       "The dictionary maps each listed index to a dictionary of that operator's hyperparameters, using the names "
       "and value types from CONFIG HYPERPARAMETERS.\n"
       "Output the list and the dictionary directly, for example:\n"
       "[1, 3]\n"
       "{1: {'crop_nums': 3, 'crop_ratio': 0.0}, 3: {'n_insert': 1}}\n"
       "\n"
       "Action:\n"},

      {std::string(templates::kReflect),
       "You are reviewing the recent attempts of the ${AGENT} agent.\n"
       "\n"
       "<MEMORY>:\n"
       "${MEMORY}\n"
       "\n"
       "<OUTCOME>\n"
       "${OUTCOME}\n"
       "\n"
       "Write one short note, starting with 'Note:', that explains the cause of the failure and what to avoid "
       "next time.\n"},

      {std::string(templates::kPredict),
       "${TASK_DESCRIPTION}\n"
       "\n"
       "<EXAMPLES>\n"
       "${EXAMPLES}\n"
       "\n"
       "<HISTORY>\n"
       "${HISTORY}\n"
       "\n"
       "Output a list of the ${K} most likely next location ids, most likely first, for example ['l1', 'l2'].\n"},
  };
  return kTemplates;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
  for (const auto& t : catalog()) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::kNotFound, "prompt template '" + std::string(name) + "'");
}

std::vector<std::string> template_names() {
  std::vector<std::string> out;
  for (const auto& t : catalog()) out.push_back(t.name);
  return out;
}

std::vector<std::string> slots_of(const PromptTemplate& tmpl) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = tmpl.text.find("${", pos)) != std::string::npos) {
    const auto close = tmpl.text.find('}', pos);
    if (close == std::string::npos) break;
    std::string name = tmpl.text.substr(pos + 2, close - pos - 2);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(std::move(name));
    pos = close + 1;
  }
  return out;
}

std::string render_list(const std::vector<std::string>& entries, std::size_t budget) {
  // Walk from the newest entry back while the joined text still fits.
  std::size_t used = 0;
  std::size_t first = entries.size();
  while (first > 0) {
    const std::size_t cost = entries[first - 1].size() + (first < entries.size() ? 1 : 0);
    if (used + cost > budget) break;
    used += cost;
    --first;
  }
  std::string out;
  for (std::size_t i = first; i < entries.size(); ++i) {
    if (i > first) out += '\n';
    out += entries[i];
  }
  return out;
}

std::vector<ChatMessage> render(const PromptTemplate& tmpl, const PromptSlots& slots,
                                const std::vector<std::string>& notes, std::size_t memory_budget) {
  std::string out;
  const std::string& t = tmpl.text;
  std::size_t pos = 0;
  for (;;) {
    const auto open = t.find("${", pos);
    if (open == std::string::npos) {
      out.append(t, pos, std::string::npos);
      break;
    }
    const auto close = t.find('}', open);
    out.append(t, pos, open - pos);
    const std::string name = t.substr(open + 2, close - open - 2);
    if (auto it = slots.text.find(name); it != slots.text.end()) {
      out += it->second;
    } else if (auto lt = slots.lists.find(name); lt != slots.lists.end()) {
      out += render_list(lt->second, memory_budget);
    } else {
      throw Error(ErrorCode::kUnboundSlot, name + " in template " + tmpl.name);
    }
    pos = close + 1;
  }

  std::vector<ChatMessage> messages;
  if (!notes.empty()) {
    std::string sys = "Lessons from earlier runs:";
    for (const auto& n : notes) sys += "\n- " + n;
    messages.push_back({ChatMessage::Role::kSystem, sys});
  }
  messages.push_back({ChatMessage::Role::kUser, out});
  return messages;
}

}  // namespace trajagent
