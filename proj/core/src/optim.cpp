#include "trajagent/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "trajagent/error.hpp"
#include "trajagent/parse.hpp"
#include "trajagent/prompts.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

constexpr std::string_view kTuningPrinciples =
    "1. Change one hyperparameter at a time and keep the change only if the score rises.\n"
    "2. Use the values listed as choices in the comment of each hyperparameter.\n"
    "3. On sparse data with repeated personal routines, per-entity statistics usually matter more than "
    "global ones.\n"
    "4. Longer contexts need more data; back off to shorter ones when the score drops.\n"
    "5. Reverse a change that lowers the score.";

bool improves(double best, double score, double epsilon) {
  if (!std::isfinite(score)) return false;
  if (!std::isfinite(best)) return true;
  return score > best + epsilon * std::abs(best);
}

TrainReport failed_report(const std::string& text) {
  TrainReport r;
  r.status = TrainReport::Status::kError;
  r.error = text.empty() ? "unknown failure" : text;
  return r;
}

std::string record_key(const ExperimentRecord& r) {
  switch (r.stage) {
    case Stage::kDA:
      if (r.action.contains("plan")) return plan_key(plan_from_json(r.action["plan"]));
      break;
    case Stage::kPO:
      if (r.action.contains("config")) return r.action["config"].dump();
      break;
    case Stage::kPRO:
      if (r.action.contains("examples")) return r.action["examples"].dump();
      break;
    case Stage::kBase: break;
  }
  return {};
}

std::string format_score(double v) { return std::isfinite(v) ? format_fixed(v, 4) : "none"; }

}  // namespace

void StopCriteria::validate() const {
  if (max_rounds < 1) throw Error(ErrorCode::kValidationError, "max_rounds must be >= 1");
  if (patience < 1) throw Error(ErrorCode::kValidationError, "patience must be >= 1");
  if (!(epsilon >= 0)) throw Error(ErrorCode::kValidationError, "epsilon must be >= 0");
  if (max_cycles < 1) throw Error(ErrorCode::kValidationError, "max_cycles must be >= 1");
}

json OptimAction::to_json() const {
  switch (stage) {
    case Stage::kDA: return json{{"plan", trajagent::to_json(plan)}};
    case Stage::kPO: return json{{"config", config}};
    case Stage::kPRO: return json{{"examples", examples}};
    case Stage::kBase: break;
  }
  return json::object();
}

std::string OptimAction::key() const {
  switch (stage) {
    case Stage::kDA: return plan_key(plan);
    case Stage::kPO: return config.dump();
    case Stage::kPRO: return json(examples).dump();
    case Stage::kBase: break;
  }
  return {};
}

json OptimizationResult::to_json() const {
  json stages_json = json::array();
  for (const auto& s : stages) {
    stages_json.push_back({{"stage", to_string(s.stage)},
                           {"cycle", s.cycle},
                           {"rounds", s.rounds},
                           {"best_score", std::isfinite(s.best_score) ? json(s.best_score) : json(nullptr)},
                           {"stop_reason", s.stop_reason}});
  }
  json final_json = json::object();
  for (const auto& [k, v] : final_metrics) final_json[k] = v;
  return json{{"origin_ok", origin_ok},
              {"origin_score", std::isfinite(origin_score) ? json(origin_score) : json(nullptr)},
              {"best_score", std::isfinite(best_score) ? json(best_score) : json(nullptr)},
              {"best_round", best_round},
              {"delta", delta},
              {"best_plan", trajagent::to_json(best_plan)},
              {"best_config", best_config},
              {"best_examples", best_examples},
              {"stages", stages_json},
              {"evaluations", evaluations},
              {"final_metrics", final_json},
              {"notes", notes}};
}

double improvement(double origin, double best, bool origin_ok) {
  if (!origin_ok || !std::isfinite(origin) || origin == 0.0 || !std::isfinite(best)) return 0.0;
  return (best - origin) / std::abs(origin);
}

ExperimentRecord record_from_report(const TrainReport& report) {
  ExperimentRecord r;
  r.status = report.ok() ? RecordStatus::kOk : RecordStatus::kFailed;
  r.score = report.ok() ? report.score : kNoScore;
  r.metrics = report.metrics;
  r.wall_time_s = report.wall_time_s;
  if (!report.ok()) r.feedback = "error: " + report.error;
  return r;
}

// ---------------------------------------------------------------- Evaluator

Evaluator::Evaluator(OptimTarget target, OptimSettings settings, LlmClient* llm)
    : target_(std::move(target)), settings_(std::move(settings)), llm_(llm) {
  if (!target_.split) throw Error(ErrorCode::kValidationError, "optimization target has no data split");
  settings_.criteria.validate();
}

std::shared_ptr<const Dataset> Evaluator::augmented(const AugmentPlan& plan) {
  const std::string key = plan_key(plan);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  if (cache_.size() >= 16) cache_.clear();
  std::shared_ptr<const Dataset> ds;
  if (plan.ops.empty()) {
    ds = std::shared_ptr<const Dataset>(target_.split, &target_.split->train);
  } else {
    ds = std::make_shared<const Dataset>(apply_plan(target_.split->train, plan, derive_seed(settings_.seed, fnv1a(key))));
  }
  cache_[key] = ds;
  return ds;
}

TrainReport Evaluator::train(const AugmentPlan& plan, const json& config, bool include_test) {
  ++trainings_;
  if (llm_model()) return failed_report("model '" + target_.model.name + "' is scored through prompts, not training");
  std::shared_ptr<DataSplit> split;
  TrainerConfig cfg = target_.base_config;
  try {
    cfg.apply(config);
    auto train = augmented(plan);
    split = std::make_shared<DataSplit>();
    split->train = *train;
    split->val = target_.split->val;
    split->test = target_.split->test;
    split->ratios = target_.split->ratios;
  } catch (const std::exception& e) {
    return failed_report(e.what());
  }
  TrainRequest req;
  req.task = target_.task.name;
  req.split = split;
  req.config = std::move(cfg);
  req.seed = settings_.seed;
  req.metric = target_.task.metric;
  req.direction = target_.task.direction;
  req.budget_s = settings_.trial_budget_s;
  req.include_test = include_test;
  return handle_train_request(req, target_.model.binding);
}

const std::vector<PromptItem>& Evaluator::prompt_items() {
  if (items_ready_) return items_;
  std::vector<PromptItem> all;
  for (const auto& t : target_.split->val.trajectories) {
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      PromptItem item;
      item.entity = t.entity_id;
      for (std::size_t h = 0; h < i; ++h) item.history.push_back(t.points[h].loc_id);
      item.truth = t.points[i].loc_id;
      all.push_back(std::move(item));
    }
  }
  const std::size_t cap = settings_.prompt_items;
  if (all.size() <= cap) {
    items_ = std::move(all);
  } else {
    for (std::size_t j = 0; j < cap; ++j) items_.push_back(all[j * all.size() / cap]);
  }
  items_ready_ = true;
  return items_;
}

TrainReport Evaluator::score_prompt(const std::vector<std::size_t>& examples, json* items_out) {
  ++trainings_;
  if (!llm_) return failed_report("no chat model configured");
  const auto& items = prompt_items();
  if (items.empty()) return failed_report("no evaluation items in val");
  const auto spec = parse_metric(target_.task.metric);
  if (!spec || (spec->family != MetricSpec::Family::kAccAtK && spec->family != MetricSpec::Family::kHitAtK)) {
    return failed_report("prompt scoring supports Acc@k/Hit@k, not " + target_.task.metric);
  }

  std::string demo_text;
  json demo_json = json::array();
  for (std::size_t idx : examples) {
    if (idx >= items.size()) return failed_report("example index " + std::to_string(idx) + " out of range");
    const auto& ex = items[idx];
    demo_text += "history: " + join(ex.history, " -> ") + "\nnext: " + ex.truth + "\nreason: " + ex.truth +
                 " was the true next location after " + ex.history.back() + ".\n";
    demo_json.push_back({{"history", ex.history}, {"truth", ex.truth}});
  }
  if (demo_text.empty()) demo_text = "none";

  const auto start = std::chrono::steady_clock::now();
  std::size_t hits = 0;
  json outcomes = json::array();
  try {
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      PromptSlots slots;
      slots.text["TASK_DESCRIPTION"] = target_.task.description;
      slots.text["EXAMPLES"] = demo_text;
      slots.text["HISTORY"] = join(item.history, " -> ");
      slots.text["K"] = std::to_string(spec->k);
      ChatRequest req;
      req.template_name = std::string(templates::kPredict);
      req.context = {{"history", item.history}, {"examples", demo_json}, {"k", spec->k}};
      req.messages = render(prompt_template(templates::kPredict), slots);
      const std::string reply = llm_->complete(req);
      int rank = 0;
      try {
        const auto ranked = parse_location_list(reply);
        for (std::size_t r = 0; r < ranked.size() && r < spec->k; ++r) {
          if (ranked[r] == item.truth) {
            rank = static_cast<int>(r) + 1;
            break;
          }
        }
      } catch (const Error&) {
        rank = 0;  // unparsable reply counts as a miss
      }
      hits += rank > 0 ? 1 : 0;
      outcomes.push_back({{"index", i}, {"rank", rank}});
    }
  } catch (const std::exception& e) {
    return failed_report(e.what());
  }
  if (items_out) *items_out = outcomes;
  TrainReport r;
  r.status = TrainReport::Status::kOk;
  const double value = static_cast<double>(hits) / static_cast<double>(items.size());
  r.metrics["val/" + spec->name] = value;
  r.score = maximize_normalized(value, target_.task.direction);
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------- Optimizer

Optimizer::Optimizer(OptimTarget target, LlmClient& llm, MemoryStore& memory, OptimSettings settings)
    : evaluator_(std::move(target), settings, &llm), llm_(llm), memory_(memory), settings_(std::move(settings)) {
  if (settings_.thought_steps < 1) throw Error(ErrorCode::kValidationError, "thought steps must be >= 1");
  if (settings_.parse_retries < 1) throw Error(ErrorCode::kValidationError, "parse retries must be >= 1");
  best_config_ = evaluator_.target().base_config.values_json();
}

void Optimizer::absorb(const ExperimentRecord& r) {
  if (!r.ok() || !(r.score > best_score_)) return;
  best_score_ = r.score;
  best_round_ = r.round;
  if (r.action.contains("plan")) best_plan_ = plan_from_json(r.action["plan"]);
  if (r.action.contains("config")) best_config_ = r.action["config"];
  if (r.action.contains("examples")) best_examples_ = r.action["examples"].get<std::vector<std::size_t>>();
}

const ExperimentRecord& Optimizer::baseline() {
  if (have_baseline_) return baseline_;
  if (auto old = memory_.find_round(0)) {
    baseline_ = *old;
  } else {
    const std::string started = utc_timestamp();
    TrainReport report;
    json action;
    if (evaluator_.llm_model()) {
      report = evaluator_.score_prompt({}, &baseline_.items);
      action = {{"examples", json::array()}};
    } else {
      report = evaluator_.train(AugmentPlan{}, best_config_);
      action = {{"plan", to_json(AugmentPlan{})}, {"config", best_config_}};
    }
    json items = baseline_.items;
    baseline_ = record_from_report(report);
    baseline_.items = std::move(items);
    baseline_.round = 0;
    baseline_.cycle = 0;
    baseline_.stage = Stage::kBase;
    baseline_.action = action;
    baseline_.action_text = "baseline";
    if (baseline_.ok()) baseline_.feedback = "baseline";
    baseline_.started_at = started;
    baseline_.finished_at = utc_timestamp();
    memory_.append(baseline_);
  }
  if (!baseline_.ok()) notes_.push_back("baseline failed: " + baseline_.feedback);
  absorb(baseline_);
  have_baseline_ = true;
  return baseline_;
}

std::string Optimizer::characteristics() const {
  const Dataset& train = evaluator_.target().split->train;
  std::string kind = train.kind == TrajectoryKind::kCheckin
                         ? "Sparse check-in trajectories: each session is a time-ordered list of visited location ids."
                         : "Dense GPS trajectories: each session is a time-ordered list of grid cells visited.";
  return kind + " Training split: " + stats(train).summary() + ".";
}

std::vector<std::string> Optimizer::memory_lines(Stage stage) const {
  std::vector<std::string> lines;
  const auto recent = memory_.short_term(stage);
  if (recent.size() < memory_.window() && have_baseline_) lines.push_back(memory_entry(baseline_));
  for (const auto& r : recent) lines.push_back(memory_entry(r));
  return lines;
}

std::vector<std::string> Optimizer::tried_keys(Stage stage) const {
  std::vector<std::string> keys;
  if (stage == Stage::kDA) keys.push_back(plan_key(AugmentPlan{}));
  if (stage == Stage::kPO) keys.push_back(evaluator_.target().base_config.values_json().dump());
  for (const auto& r : memory_.long_term()) {
    if (r.stage == stage) keys.push_back(record_key(r));
  }
  return keys;
}

json Optimizer::think_context(Stage stage, int step, int steps) const {
  return json{{"stage", to_string(stage)},
              {"step", step},
              {"steps", steps},
              {"records", memory_.long_term().size()},
              {"best_score", std::isfinite(best_score_) ? json(best_score_) : json(nullptr)}};
}

std::string Optimizer::think(Stage stage) {
  if (stage != Stage::kDA && stage != Stage::kPO) {
    throw Error(ErrorCode::kValidationError, "think supports the DA and PO stages");
  }
  const bool da = stage == Stage::kDA;
  TrainerConfig current = evaluator_.target().base_config;
  current.apply(best_config_);

  std::vector<std::string> scratch;
  std::string last;
  for (int step = 1; step <= settings_.thought_steps; ++step) {
    PromptSlots slots;
    slots.text["CHARACTERISTICS_OF_INPUT_DATA"] = characteristics();
    slots.text["SCRATCHPAD"] = scratch.empty() ? "(empty)" : join(scratch, "\n");
    slots.lists["MEMORY"] = memory_lines(stage);
    if (da) {
      slots.text["CONFIG_HYPERPARAMETERS"] = describe_operator_params();
      slots.text["MEANING_OF_OPERATORS"] = describe_operator_meanings();
      slots.text["BEST_SCORE"] = format_score(best_score_);
    } else {
      slots.text["CONFIG_HYPERPARAMETERS"] = current.serialize();
      slots.text["TUNING_PRINCIPLES"] = std::string(kTuningPrinciples);
    }
    ChatRequest req;
    req.template_name = std::string(da ? templates::kDaThink : templates::kPoThink);
    req.context = think_context(stage, step, settings_.thought_steps);
    req.messages = render(prompt_template(req.template_name), slots, notes_for_prompts_, settings_.memory_budget);
    try {
      last = llm_.complete(req);
    } catch (const Error& e) {
      throw Error(ErrorCode::kLlmFailure, e.what());
    }
    if (trim(last).empty()) throw Error(ErrorCode::kLlmFailure, "empty guidance");
    scratch.push_back("Thought " + std::to_string(step) + ": " + last);
  }
  memory_.set_guidance(last);
  return last;
}

std::optional<OptimAction> Optimizer::proposal_once(Stage stage, const std::string& guidance,
                                                    const std::vector<std::string>& rejected, std::string* error) {
  const bool da = stage == Stage::kDA;
  const auto& base = evaluator_.target().base_config;
  std::vector<std::string> tried = tried_keys(stage);
  tried.insert(tried.end(), rejected.begin(), rejected.end());

  PromptSlots slots;
  slots.text["SCRATCHPAD"] = guidance;
  ChatRequest req;
  if (da) {
    std::string index = "{";
    for (const auto& op : list_operators()) {
      if (op.index > 1) index += ", ";
      index += std::to_string(op.index) + ": '" + op.name + "'";
    }
    index += "}";
    slots.text["CONFIG_HYPERPARAMETERS"] = describe_operator_params();
    slots.text["OPERATOR_INDEX"] = index;
    req.template_name = std::string(templates::kDaAction);
    req.context = {{"best_plan", to_json(best_plan_)}, {"tried", tried}};
  } else {
    TrainerConfig current = base;
    current.apply(best_config_);
    slots.text["CONFIG_HYPERPARAMETERS"] = current.serialize();
    json space = json::array();
    for (const auto& [name, choices] : base.search_space()) {
      json cs = json::array();
      for (const auto& c : choices) cs.push_back(to_json(c));
      space.push_back({name, cs});
    }
    std::set<std::string> varied;
    const json defaults = base.values_json();
    for (const auto& r : memory_.long_term()) {
      if (r.stage != Stage::kPO || !r.action.contains("config")) continue;
      for (const auto& [name, v] : r.action["config"].items()) {
        if (defaults.contains(name) && defaults[name] != v) varied.insert(name);
      }
    }
    req.template_name = std::string(templates::kPoAction);
    req.context = {{"best_config", best_config_}, {"space", space}, {"tried", tried}, {"varied", varied}};
  }
  req.messages = render(prompt_template(req.template_name), slots, notes_for_prompts_, settings_.memory_budget);

  std::string reply;
  try {
    reply = llm_.complete(req);
  } catch (const Error& e) {
    throw Error(ErrorCode::kLlmFailure, e.what());
  }
  OptimAction action;
  action.stage = stage;
  action.text = reply;
  try {
    if (da) {
      action.plan = parse_da_action(reply);
    } else {
      TrainerConfig cfg = base;
      cfg.apply(parse_po_action(reply, base));
      action.config = cfg.values_json();
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParseFailure && e.code() != ErrorCode::kValidationFailure) throw;
    *error = e.what();
    return std::nullopt;
  }
  return action;
}

OptimAction Optimizer::pro_action() const {
  // Rank items by their best outcome so far: hits by rank, then index.
  std::map<std::size_t, int> best_rank;
  for (const auto& r : memory_.long_term()) {
    for (const auto& item : r.items) {
      const std::size_t idx = item.at("index").get<std::size_t>();
      const int rank = item.at("rank").get<int>();
      if (rank <= 0) continue;
      auto it = best_rank.find(idx);
      if (it == best_rank.end() || rank < it->second) best_rank[idx] = rank;
    }
  }
  std::vector<std::pair<int, std::size_t>> ranked;
  for (const auto& [idx, rank] : best_rank) ranked.emplace_back(rank, idx);
  std::sort(ranked.begin(), ranked.end());

  std::set<std::string> tried;
  for (const auto& r : memory_.long_term()) {
    if (r.stage == Stage::kPRO) tried.insert(record_key(r));
  }
  OptimAction action;
  action.stage = Stage::kPRO;
  for (std::size_t j = 1; j < ranked.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      std::vector<std::size_t> pair = {ranked[i].second, ranked[j].second};
      if (tried.count(json(pair).dump())) continue;
      action.examples = pair;
      action.text = "few-shot items " + json(pair).dump();
      return action;
    }
  }
  action.failed = true;
  action.failure = ranked.size() < 2 ? "fewer than two correctly predicted items to use as examples"
                                     : "every pair of top items has been tried";
  return action;
}

OptimAction Optimizer::propose_action(Stage stage, const std::string& guidance) {
  if (stage == Stage::kPRO) return pro_action();
  if (stage != Stage::kDA && stage != Stage::kPO) {
    throw Error(ErrorCode::kValidationError, "no action space for stage " + std::string(to_string(stage)));
  }
  std::vector<std::string> rejected;
  for (int guard = 0; guard < 2; ++guard) {
    std::optional<OptimAction> action;
    std::string error;
    for (int attempt = 0; attempt < settings_.parse_retries && !action; ++attempt) {
      action = proposal_once(stage, guidance, rejected, &error);
    }
    if (!action) {
      OptimAction failed;
      failed.stage = stage;
      failed.failed = true;
      failed.failure = Error(ErrorCode::kRetryExhausted, std::to_string(settings_.parse_retries) +
                                                             " unparsable replies, last: " + error)
                           .what();
      return failed;
    }
    // Reject a repeat of a failed or below-best action still in view.
    bool trap = false;
    const std::string key = action->key();
    for (const auto& r : memory_.short_term(stage)) {
      if (record_key(r) == key && (!r.ok() || r.score < best_score_)) trap = true;
    }
    if (trap && guard == 0) {
      rejected.push_back(key);
      continue;
    }
    return *action;
  }
  throw Error(ErrorCode::kValidationError, "unreachable");
}

ExperimentRecord Optimizer::evaluate_action(const OptimAction& action) {
  const std::string started = utc_timestamp();
  ExperimentRecord r;
  if (action.failed) {
    r.status = RecordStatus::kFailed;
    r.score = kNoScore;
    r.feedback = "error: unparsable action: " + action.failure;
  } else {
    TrainReport report;
    switch (action.stage) {
      case Stage::kDA: report = evaluator_.train(action.plan, best_config_); break;
      case Stage::kPO: report = evaluator_.train(best_plan_, action.config); break;
      case Stage::kPRO: report = evaluator_.score_prompt(action.examples, &r.items); break;
      case Stage::kBase: report = failed_report("baseline is not an action"); break;
    }
    json items = r.items;
    r = record_from_report(report);
    r.items = std::move(items);
    if (r.ok()) {
      r.feedback = r.score > best_score_ ? "improved"
                                         : "not good enough, score " + format_score(r.score) + " < best " +
                                               format_score(best_score_);
    }
  }
  r.round = next_round_;
  r.cycle = cycle_;
  r.stage = action.stage;
  switch (action.stage) {
    case Stage::kDA: r.action = {{"plan", to_json(action.plan)}, {"config", best_config_}}; break;
    case Stage::kPO: r.action = {{"plan", to_json(best_plan_)}, {"config", action.config}}; break;
    default: r.action = action.to_json(); break;
  }
  if (action.failed) r.action["failed"] = true;
  r.action_text = action.failed ? action.text : (action.stage == Stage::kDA ? to_text(action.plan) : action.text);
  r.started_at = started;
  r.finished_at = utc_timestamp();
  return r;
}

ExperimentRecord Optimizer::next_round(Stage stage) {
  const int round = next_round_;
  ExperimentRecord r;
  if (auto old = memory_.find_round(round)) {
    r = *old;
  } else {
    r = fresh_round(stage);
    memory_.append(r);
  }
  absorb(r);
  ++next_round_;
  ++evaluations_;
  if (!r.ok() && failure_notes_.insert(r.feedback).second && notes_.size() < 10) {
    notes_.push_back("round " + std::to_string(r.round) + " " + std::string(to_string(stage)) + ": " + r.feedback);
  }
  return r;
}

ExperimentRecord Optimizer::fresh_round(Stage stage) {
  const int round = next_round_;
  ExperimentRecord r;
  try {
    const std::string guidance = stage == Stage::kPRO ? std::string() : think(stage);
    r = evaluate_action(propose_action(stage, guidance));
  } catch (const std::exception& e) {
    r = ExperimentRecord{};
    r.round = round;
    r.cycle = cycle_;
    r.stage = stage;
    r.status = RecordStatus::kFailed;
    r.score = kNoScore;
    r.feedback = std::string("error: ") + e.what();
    r.started_at = r.finished_at = utc_timestamp();
  }
  return r;
}

StageOutcome Optimizer::run_stage_loop(Stage stage) {
  baseline();
  if (cycle_ == 0) cycle_ = 1;
  const auto& c = settings_.criteria;
  StageOutcome out;
  out.stage = stage;
  out.cycle = cycle_;
  if (c.target && best_score_ >= *c.target) {
    out.stop_reason = "target";
    stages_.push_back(out);
    return out;
  }
  double stage_best = kNoScore;
  int since = 0;
  for (int i = 0; i < c.max_rounds; ++i) {
    const ExperimentRecord r = next_round(stage);
    ++out.rounds;
    if (r.ok() && improves(stage_best, r.score, c.epsilon)) {
      stage_best = r.score;
      since = 0;
    } else {
      if (r.ok() && r.score > stage_best) stage_best = r.score;
      ++since;
    }
    if (c.target && best_score_ >= *c.target) {
      out.stop_reason = "target";
      break;
    }
    if (since >= c.patience) {
      out.stop_reason = "patience";
      break;
    }
  }
  if (out.stop_reason.empty()) out.stop_reason = "max_rounds";
  out.best_score = stage_best;
  stages_.push_back(out);
  return out;
}

OptimizationResult Optimizer::run_joint() {
  baseline();
  for (int cycle = 1; cycle <= settings_.criteria.max_cycles; ++cycle) {
    cycle_ = cycle;
    run_stage_loop(Stage::kDA);
    run_stage_loop(Stage::kPO);
    if (settings_.criteria.target && best_score_ >= *settings_.criteria.target) break;
  }
  return result();
}

OptimizationResult Optimizer::run(const std::vector<std::string>& stages) {
  baseline();
  auto has = [&](std::string_view s) {
    return std::any_of(stages.begin(), stages.end(), [&](const std::string& x) { return iequals(x, s); });
  };
  const bool llm = evaluator_.llm_model();
  if (has("JO") && !llm) return run_joint();
  cycle_ = 1;
  if (has("DA") || has("JO")) {
    if (llm) {
      notes_.push_back("DA skipped: the model is scored through prompts");
    } else {
      run_stage_loop(Stage::kDA);
    }
  }
  if (has("PO") || has("JO")) {
    if (llm) {
      notes_.push_back("PO skipped: the model has no trainer config");
    } else {
      run_stage_loop(Stage::kPO);
    }
  }
  if (has("PRO")) {
    if (llm) {
      run_stage_loop(Stage::kPRO);
    } else {
      notes_.push_back("PRO skipped: the model is not prompt-based");
    }
  }
  return result();
}

void Optimizer::finalize() {
  baseline();
  if (!std::isfinite(best_score_)) return;
  if (evaluator_.llm_model()) {
    if (auto r = memory_.find_round(best_round_)) final_metrics_ = r->metrics;
    return;
  }
  const TrainReport report = evaluator_.train(best_plan_, best_config_, true);
  if (report.ok()) {
    final_metrics_ = report.metrics;
  } else {
    notes_.push_back("final evaluation failed: " + report.error);
  }
}

OptimizationResult Optimizer::result() const {
  OptimizationResult res;
  res.origin_ok = have_baseline_ && baseline_.ok();
  res.origin_score = res.origin_ok ? baseline_.score : kNoScore;
  res.best_score = best_score_;
  res.best_round = best_round_;
  res.delta = improvement(res.origin_score, res.best_score, res.origin_ok);
  res.best_plan = best_plan_;
  res.best_config = best_config_;
  res.best_examples = best_examples_;
  res.stages = stages_;
  res.evaluations = evaluations_;
  res.final_metrics = final_metrics_;
  res.notes = notes_;
  return res;
}

void Optimizer::set_prompt_notes(std::vector<std::string> notes) { notes_for_prompts_ = std::move(notes); }

}  // namespace trajagent
