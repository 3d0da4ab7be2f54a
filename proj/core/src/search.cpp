#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxRandomOps = 3;
constexpr int kResampleAttempts = 50;

ExperimentRecord scored(Evaluator& ev, int round, Stage stage, const AugmentPlan& plan, const json& config) {
  const std::string started = utc_timestamp();
  ExperimentRecord r = record_from_report(ev.train(plan, config));
  r.round = round;
  r.cycle = 1;
  r.stage = stage;
  r.action = {{"plan", to_json(plan)}, {"config", config}};
  r.action_text = stage == Stage::kDA ? to_text(plan) : config.dump();
  if (stage == Stage::kPO && !plan.ops.empty()) r.action_text = to_text(plan) + "\n" + config.dump();
  if (r.ok()) r.feedback = "scored";
  r.started_at = started;
  r.finished_at = utc_timestamp();
  return r;
}

AugmentPlan random_plan(Rng& rng) {
  std::vector<int> indices;
  for (const auto& op : list_operators()) indices.push_back(op.index);
  rng.shuffle(indices);
  const std::size_t n = 1 + rng.index(kMaxRandomOps);
  AugmentPlan plan;
  for (std::size_t i = 0; i < n; ++i) {
    const int idx = indices[i];
    plan.ops.push_back(idx);
    ParamMap params;
    for (const auto& p : operator_spec(idx).params) {
      if (!p.grid.empty()) params[p.name] = p.grid[rng.index(p.grid.size())];
    }
    if (!params.empty()) plan.params[idx] = params;
  }
  return plan;
}

json random_config(Rng& rng, const TrainerConfig& base) {
  json values = base.values_json();
  for (const auto& [name, choices] : base.search_space()) {
    if (!choices.empty()) values[name] = to_json(choices[rng.index(choices.size())]);
  }
  TrainerConfig cfg = base;
  cfg.apply(values);
  return cfg.values_json();
}

SearchResult finish(std::vector<ExperimentRecord> records) {
  SearchResult out;
  out.records = std::move(records);
  if (!out.records.empty() && out.records.front().ok()) out.origin = out.records.front().score;
  for (const auto& r : out.records) {
    if (r.ok() && r.score > out.best) out.best = r.score;
  }
  out.curve = best_curve(out.records);
  return out;
}

}  // namespace

SearchResult random_search(Evaluator& evaluator, Stage stage, std::size_t budget, std::uint64_t seed) {
  if (stage != Stage::kDA && stage != Stage::kPO) {
    throw Error(ErrorCode::kValidationError, "random search covers the DA and PO stages");
  }
  const TrainerConfig& base = evaluator.target().base_config;
  const json defaults = base.values_json();
  Rng rng(derive_seed(seed, fnv1a(to_string(stage))));

  std::vector<ExperimentRecord> records;
  records.push_back(scored(evaluator, 0, Stage::kBase, AugmentPlan{}, defaults));
  std::set<std::string> seen = {stage == Stage::kDA ? plan_key(AugmentPlan{}) : defaults.dump()};
  for (std::size_t i = 1; i <= budget; ++i) {
    AugmentPlan plan;
    json config = defaults;
    for (int attempt = 0; attempt < kResampleAttempts; ++attempt) {
      std::string key;
      if (stage == Stage::kDA) {
        plan = random_plan(rng);
        key = plan_key(plan);
      } else {
        config = random_config(rng, base);
        key = config.dump();
      }
      if (seen.insert(key).second) break;
    }
    records.push_back(scored(evaluator, static_cast<int>(i), stage, plan, config));
  }
  return finish(std::move(records));
}

SearchResult random_joint_search(Evaluator& evaluator, std::size_t budget, std::uint64_t seed) {
  const TrainerConfig& base = evaluator.target().base_config;
  const json defaults = base.values_json();
  Rng rng(derive_seed(seed, fnv1a("JO")));

  std::vector<ExperimentRecord> records;
  records.push_back(scored(evaluator, 0, Stage::kBase, AugmentPlan{}, defaults));
  std::set<std::string> seen = {plan_key(AugmentPlan{}) + defaults.dump()};
  for (std::size_t i = 1; i <= budget; ++i) {
    AugmentPlan plan;
    json config = defaults;
    for (int attempt = 0; attempt < kResampleAttempts; ++attempt) {
      plan = random_plan(rng);
      config = random_config(rng, base);
      if (seen.insert(plan_key(plan) + config.dump()).second) break;
    }
    records.push_back(scored(evaluator, static_cast<int>(i), Stage::kPO, plan, config));
  }
  return finish(std::move(records));
}

SearchResult grid_search(Evaluator& evaluator, const SearchSpace& grid) {
  const TrainerConfig& base = evaluator.target().base_config;
  const json defaults = base.values_json();
  std::vector<ExperimentRecord> records;
  records.push_back(scored(evaluator, 0, Stage::kBase, AugmentPlan{}, defaults));

  for (const auto& [name, choices] : grid) {
    if (choices.empty()) throw Error(ErrorCode::kValidationError, "grid for '" + name + "' has no values");
  }
  std::vector<std::size_t> pos(grid.size(), 0);
  int round = 1;
  while (true) {
    json config = defaults;
    for (std::size_t i = 0; i < grid.size(); ++i) config[grid[i].first] = to_json(grid[i].second[pos[i]]);
    TrainerConfig cfg = base;
    cfg.apply(config);
    records.push_back(scored(evaluator, round++, Stage::kPO, AugmentPlan{}, cfg.values_json()));
    // Odometer increment, last dimension fastest.
    std::size_t d = grid.size();
    while (d > 0) {
      --d;
      if (++pos[d] < grid[d].second.size()) break;
      pos[d] = 0;
      if (d == 0) return finish(std::move(records));
    }
    if (grid.empty()) break;
  }
  return finish(std::move(records));
}

std::vector<double> best_curve(const std::vector<ExperimentRecord>& records) {
  std::vector<double> curve;
  double best = kNoScore;
  for (const auto& r : records) {
    if (r.stage == Stage::kBase) continue;
    if (r.ok() && r.score > best) best = r.score;
    curve.push_back(best);
  }
  return curve;
}

std::string curve_csv(const std::vector<std::pair<std::string, std::vector<ExperimentRecord>>>& runs) {
  std::ostringstream out;
  out << "method,evaluation,score,best\n";
  auto cell = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& [method, records] : runs) {
    double best = kNoScore;
    int n = 0;
    for (const auto& r : records) {
      if (r.stage == Stage::kBase) continue;
      const double score = r.ok() ? r.score : kNoScore;
      if (score > best) best = score;
      out << method << ',' << ++n << ',' << cell(score) << ',' << cell(best) << '\n';
    }
  }
  return out.str();
}

}  // namespace trajagent
