#include <algorithm>
#include <map>
#include <set>

#include "trajagent/augment.hpp"
#include "trajagent/config.hpp"
#include "trajagent/error.hpp"
#include "trajagent/llm.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

std::string understand(const ChatRequest& req) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> kKeywords = {
      {"Map_Matching", {"map match", "map-match", "road segment", "road network", "snap"}},
      {"Travel_Time_Estimation", {"travel time", "how long", "eta ", "arrival time", "trip duration"}},
      {"Trajectory_User_Linkage",
       {"which user", "user linkage", "link", "identify the user", "belongs to", "who made", "owner of"}},
      {"Trajectory_Completion", {"complet", "missing point", "fill in", "fill the gap", "recover", "imput"}},
      {"Trajectory_Generation", {"generat", "synthesi", "simulate"}},
      {"Mobility_Intent_Prediction", {"intent", "purpose", "why the user"}},
      {"Next_Location_Prediction",
       {"next location", "next poi", "next place", "next visit", "go next", "goes next", "going next",
        "visit next", "next check-in", "next stop"}},
  };
  const std::string q = to_lower(req.context.value("query", std::string()));
  std::set<std::string> known;
  if (req.context.contains("tasks")) {
    for (const auto& t : req.context["tasks"]) known.insert(t.get<std::string>());
  }
  for (const auto& [task, words] : kKeywords) {
    if (!known.empty() && !known.count(task)) continue;
    for (const auto& w : words) {
      if (q.find(w) != std::string::npos) return task;
    }
  }
  return "Unsupported";
}

std::string think(const ChatRequest& req) {
  const auto& c = req.context;
  const std::string stage = c.value("stage", std::string("PO"));
  const int step = c.value("step", 1);
  const int records = c.value("records", 0);
  std::string best = "none yet";
  if (c.contains("best_score") && c["best_score"].is_number()) best = format_fixed(c["best_score"].get<double>(), 4);
  const std::string what = stage == "DA" ? "augmentation plan" : "hyperparameter setting";
  return "Firstly, I reviewed " + std::to_string(records) + " records in MEMORY and the best score so far is " +
         best + ". Then, in step " + std::to_string(step) + " I will keep the best " + what +
         " and change one part of it that has not been tried, preferring large moves on untouched settings. "
         "Lastly, I will reverse any change that lowers the score.";
}

std::set<std::string> tried_keys(const json& c) {
  std::set<std::string> out;
  if (c.contains("tried")) {
    for (const auto& k : c["tried"]) out.insert(k.get<std::string>());
  }
  return out;
}

std::string format_po_reply(const json& values) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : values.items()) {
    if (!first) out += ", ";
    first = false;
    out += "'" + k + "': " + (v.is_string() ? "'" + v.get<std::string>() + "'" : v.dump());
  }
  return out + "}";
}

std::vector<std::size_t> move_order(std::size_t current, std::size_t n, bool explore) {
  // Untouched settings jump to the far end first; later moves are local.
  std::vector<std::size_t> order;
  if (explore) {
    const std::size_t far = current < n / 2 ? n - 1 : 0;
    if (far != current) order.push_back(far);
  }
  for (std::size_t d = 1; d < n; ++d) {
    if (current + d < n) order.push_back(current + d);
    if (current >= d) order.push_back(current - d);
  }
  return order;
}

std::string po_action(const ChatRequest& req) {
  const auto& c = req.context;
  const json best = c.at("best_config");
  const auto tried = tried_keys(c);
  std::set<std::string> varied;
  if (c.contains("varied")) {
    for (const auto& v : c["varied"]) varied.insert(v.get<std::string>());
  }
  const json& space = c.at("space");
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& entry : space) {
      const std::string name = entry.at(0);
      const json& choices = entry.at(1);
      if (pass == 0 && varied.count(name)) continue;
      std::size_t current = 0;
      bool on_grid = false;
      for (std::size_t i = 0; i < choices.size(); ++i) {
        if (choices[i] == best.at(name)) {
          current = i;
          on_grid = true;
        }
      }
      std::vector<std::size_t> order;
      if (on_grid) {
        order = move_order(current, choices.size(), pass == 0);
      } else {
        for (std::size_t i = 0; i < choices.size(); ++i) order.push_back(i);
      }
      for (std::size_t idx : order) {
        json candidate = best;
        candidate[name] = choices[idx];
        if (!tried.count(candidate.dump())) return format_po_reply(candidate);
      }
    }
  }
  return format_po_reply(best);
}

std::vector<AugmentPlan> da_neighbours(const AugmentPlan& best) {
  std::vector<AugmentPlan> out;
  // Add an operator at the end.
  for (int op = 1; op <= kOperatorCount; ++op) {
    if (std::find(best.ops.begin(), best.ops.end(), op) != best.ops.end()) continue;
    AugmentPlan p = best;
    p.ops.push_back(op);
    out.push_back(std::move(p));
  }
  // Move one parameter of a planned operator along its grid.
  for (int op : best.ops) {
    const auto& spec = operator_spec(op);
    const ParamMap current = resolve_params(op, best.params.count(op) ? best.params.at(op) : ParamMap{});
    for (const auto& hp : spec.params) {
      std::vector<ParamValue> grid = hp.grid;
      if (grid.empty()) {
        for (const auto& ch : hp.choices) grid.emplace_back(ch);
      }
      std::size_t at = grid.size();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == current.at(hp.name)) at = i;
      }
      std::vector<std::size_t> order;
      if (at == grid.size()) {
        for (std::size_t i = 0; i < grid.size(); ++i) order.push_back(i);
      } else {
        order = move_order(at, grid.size(), false);
      }
      for (std::size_t idx : order) {
        AugmentPlan p = best;
        p.params[op][hp.name] = grid[idx];
        out.push_back(std::move(p));
      }
    }
  }
  // Drop one operator.
  for (std::size_t i = 0; i < best.ops.size(); ++i) {
    AugmentPlan p = best;
    p.params.erase(p.ops[i]);
    p.ops.erase(p.ops.begin() + static_cast<std::ptrdiff_t>(i));
    out.push_back(std::move(p));
  }
  return out;
}

std::string da_action(const ChatRequest& req) {
  const auto& c = req.context;
  const AugmentPlan best = c.contains("best_plan") ? plan_from_json(c["best_plan"]) : AugmentPlan{};
  const auto tried = tried_keys(c);
  for (const auto& p : da_neighbours(best)) {
    if (!tried.count(plan_key(p))) return to_text(p);
  }
  return to_text(best);
}

std::string reflect(const ChatRequest& req) {
  const auto& c = req.context;
  const std::string agent = c.value("agent", std::string("planning"));
  std::string cause = c.value("outcome", std::string("unknown failure"));
  if (c.contains("failures") && !c["failures"].empty()) cause = c["failures"].front().get<std::string>();
  return "Note: the " + agent + " step failed because " + cause + ". Avoid repeating that choice.";
}

std::string predict(const ChatRequest& req) {
  const auto& c = req.context;
  std::vector<std::string> history;
  for (const auto& h : c.at("history")) history.push_back(h.get<std::string>());
  const std::size_t k = c.value("k", 5);
  const bool guided = c.contains("examples") && !c["examples"].empty();

  std::vector<std::string> ranked;
  auto push = [&](const std::string& id) {
    if (ranked.size() < k && std::find(ranked.begin(), ranked.end(), id) == ranked.end()) ranked.push_back(id);
  };
  if (guided && !history.empty()) {
    // Demonstrations show visits repeating: rank what followed the current
    // location earlier in the same history, most frequent first.
    std::map<std::string, int> followers;
    for (std::size_t i = 0; i + 1 < history.size(); ++i) {
      if (history[i] == history.back()) ++followers[history[i + 1]];
    }
    std::vector<std::pair<int, std::string>> by_count;
    for (const auto& [id, n] : followers) by_count.emplace_back(-n, id);
    std::sort(by_count.begin(), by_count.end());
    for (const auto& [n, id] : by_count) push(id);
  }
  for (auto it = history.rbegin(); it != history.rend(); ++it) push(*it);
  std::string out = "[";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (i) out += ", ";
    out += "'" + ranked[i] + "'";
  }
  return out + "]";
}

}  // namespace

StubPolicy default_stub_policy() {
  StubPolicy p;
  p.set("understand", understand);
  p.set("da_think", think);
  p.set("po_think", think);
  p.set("da_action", da_action);
  p.set("po_action", po_action);
  p.set("reflect", reflect);
  p.set("predict", predict);
  return p;
}

}  // namespace trajagent
