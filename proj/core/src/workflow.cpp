#include "trajagent/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/parse.hpp"
#include "trajagent/prompts.hpp"
#include "trajagent/store.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/trainer.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kAgents = {"understanding", "planning", "optimization", "summary"};

json criteria_json(const StopCriteria& c) {
  return json{{"max_rounds", c.max_rounds},
              {"patience", c.patience},
              {"epsilon", c.epsilon},
              {"max_cycles", c.max_cycles},
              {"target", c.target ? json(*c.target) : json(nullptr)}};
}

double raw_value(double score, MetricDirection direction) {
  return direction == MetricDirection::kLowerBetter ? -score : score;
}

std::string percent(double v) { return format_fixed(v * 100.0, 2) + "%"; }

std::string supported_list(const std::vector<std::string>& names) { return "supported tasks: " + join(names, ", "); }

// Dense GPS data gets no augmentation stage, and the joint schedule reduces
// to parameter optimization.
std::vector<std::string> stages_for_kind(std::vector<std::string> stages, TrajectoryKind kind) {
  if (kind != TrajectoryKind::kGps) return stages;
  std::vector<std::string> out;
  for (const auto& s : stages) {
    const std::string name = iequals(s, "JO") ? "PO" : s;
    if (iequals(name, "DA")) continue;
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

}  // namespace

json ExecutionPlan::to_json() const {
  return json{{"task", task},
              {"dataset", dataset},
              {"model", model},
              {"stages", stages},
              {"criteria", criteria_json(criteria)},
              {"rationale", rationale},
              {"verified", verified},
              {"regenerations", regenerations},
              {"rejected", rejected}};
}

void AgentState::remember(json event) {
  memory.push_back(std::move(event));
  while (memory.size() > memory_capacity) memory.pop_front();
}

void AgentState::add_note(std::string note) {
  if (std::find(notes.begin(), notes.end(), note) != notes.end()) return;
  notes.push_back(std::move(note));
  while (notes.size() > note_capacity) notes.pop_front();
}

bool reflect(AgentState& state, const Outcome& outcome, LlmClient& llm) {
  if (outcome.success) return false;
  std::vector<std::string> memory;
  for (const auto& m : state.memory) memory.push_back(m.dump());
  PromptSlots slots;
  slots.text["AGENT"] = state.agent;
  slots.lists["MEMORY"] = memory;
  std::string text = outcome.summary;
  for (const auto& f : outcome.failures) text += "\n- " + f;
  slots.text["OUTCOME"] = text;
  ChatRequest req;
  req.template_name = std::string(templates::kReflect);
  req.context = {{"agent", state.agent}, {"outcome", outcome.summary}, {"failures", outcome.failures}};
  std::string reply;
  try {
    req.messages = render(prompt_template(templates::kReflect), slots, state.note_list());
    reply = std::string(trim(llm.complete(req)));
  } catch (const Error&) {
    return false;
  }
  if (reply.empty()) return false;
  state.add_note(reply);
  return true;
}

// ---------------------------------------------------------------- summary

json SummaryReport::to_json() const {
  json path_json = json::array();
  for (const auto& m : path) {
    path_json.push_back({{"round", m.round},
                         {"cycle", m.cycle},
                         {"stage", to_string(m.stage)},
                         {"score", m.score},
                         {"action", m.action}});
  }
  json final_json = json::object();
  for (const auto& [k, v] : final_metrics) final_json[k] = v;
  json artifacts_json = json::object();
  for (const auto& [k, v] : artifacts) artifacts_json[k] = v;
  return json{{"query", query},
              {"task", task},
              {"dataset", dataset},
              {"model", model},
              {"metric", metric},
              {"direction", to_string(direction)},
              {"stages", stages},
              {"origin_ok", origin_ok},
              {"origin", origin ? json(*origin) : json(nullptr)},
              {"final", final_score ? json(*final_score) : json(nullptr)},
              {"delta", delta},
              {"path", path_json},
              {"evaluations", evaluations},
              {"best_action", best_action},
              {"test_metrics", final_json},
              {"artifacts", artifacts_json},
              {"notes", notes}};
}

std::string SummaryReport::to_markdown() const {
  // Table cells hold one line and no bare pipes.
  auto cell = [](const std::string& text) {
    std::string out;
    for (char c : text) {
      if (c == '\n') {
        out += "<br>";
      } else if (c == '|') {
        out += "\\|";
      } else {
        out += c;
      }
    }
    return out;
  };
  auto value = [](const std::optional<double>& v) { return v ? format_fixed(*v, 4) : std::string("n/a"); };
  std::ostringstream out;
  out << "# Experiment report\n\n";
  if (!query.empty()) out << "Query: " << query << "\n\n";
  out << "| | |\n|---|---|\n";
  out << "| Task | " << task << " |\n";
  out << "| Dataset | " << dataset << " |\n";
  out << "| Model | " << model << " |\n";
  out << "| Stages | " << join(stages, ", ") << " |\n";
  out << "| Metric | " << metric << " (" << to_string(direction) << ") |\n";
  out << "| Origin | " << value(origin) << " |\n";
  out << "| Final | " << value(final_score) << " |\n";
  out << "| Improvement | " << percent(delta) << " |\n";
  out << "| Evaluations | " << evaluations << " |\n\n";

  out << "## Optimization path\n\n| Round | Cycle | Stage | " << metric << " | Action |\n|---|---|---|---|---|\n";
  for (const auto& m : path) {
    out << "| " << m.round << " | " << m.cycle << " | " << to_string(m.stage) << " | " << format_fixed(m.score, 4)
        << " | " << cell(m.action) << " |\n";
  }
  out << "\n## Best action\n\n```json\n" << best_action.dump(2) << "\n```\n";
  if (!final_metrics.empty()) {
    out << "\n## Metrics of the best action\n\n";
    for (const auto& [k, v] : final_metrics) out << "- " << k << ": " << format_fixed(v, 4) << "\n";
  }
  if (!notes.empty()) {
    out << "\n## Notes\n\n";
    for (const auto& n : notes) out << "- " << n << "\n";
  }
  if (!artifacts.empty()) {
    out << "\n## Artifacts\n\n";
    for (const auto& [k, v] : artifacts) out << "- " << k << ": " << v << "\n";
  }
  return out.str();
}

SummaryReport summarize(const OptimizationResult& result, const std::vector<ExperimentRecord>& records,
                        const SummaryContext& context) {
  SummaryReport rep;
  rep.query = context.query;
  rep.task = context.task;
  rep.dataset = context.dataset;
  rep.model = context.model;
  rep.metric = context.metric;
  rep.direction = context.direction;
  rep.stages = context.stages;
  rep.artifacts = context.artifacts;
  rep.notes = result.notes;
  rep.final_metrics = result.final_metrics;

  const auto base_it = std::find_if(records.begin(), records.end(),
                                    [](const ExperimentRecord& r) { return r.stage == Stage::kBase; });
  double origin = kNoScore;
  if (base_it != records.end()) {
    rep.origin_ok = base_it->ok();
    if (rep.origin_ok) origin = base_it->score;
    rep.path.push_back({base_it->round, base_it->cycle, Stage::kBase,
                        rep.origin_ok ? raw_value(origin, rep.direction) : std::nan(""), base_it->action_text});
  }
  double best = origin;
  for (const auto& r : records) {
    if (r.stage == Stage::kBase) continue;
    ++rep.evaluations;
    if (r.ok() && r.score > best) {
      best = r.score;
      rep.path.push_back({r.round, r.cycle, r.stage, raw_value(r.score, rep.direction), r.action_text});
    }
  }
  if (rep.origin_ok) rep.origin = raw_value(origin, rep.direction);
  if (std::isfinite(best)) rep.final_score = raw_value(best, rep.direction);
  rep.delta = improvement(origin, best, rep.origin_ok);

  rep.best_action = {{"plan", to_json(result.best_plan)},
                     {"config", result.best_config},
                     {"examples", result.best_examples}};
  return rep;
}

// ---------------------------------------------------------------- data

std::string resolve_data(Registry& registry, const std::string& data) {
  if (data.empty() || registry.find_dataset(data)) return data;
  const fs::path path(data);
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw Error(ErrorCode::kIo, "data '" + data + "' is neither a registered dataset nor an existing path");
  }
  DatasetDescriptor desc;
  if (fs::is_directory(path, ec)) {
    const fs::path meta = path / "dataset.json";
    if (!fs::exists(meta, ec)) throw Error(ErrorCode::kIo, "directory '" + data + "' has no dataset.json");
    try {
      desc = dataset_from_json(json::parse(read_file(meta.string())));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIo, meta.string() + ": " + e.what());
    }
    if (!desc.path.empty() && fs::path(desc.path).is_relative()) desc.path = (path / desc.path).string();
  } else {
    std::ifstream in(path);
    std::string header;
    if (!in || !std::getline(in, header)) throw Error(ErrorCode::kIo, "cannot read '" + data + "'");
    desc.kind = header.find("loc_id") != std::string::npos ? TrajectoryKind::kCheckin : TrajectoryKind::kGps;
    desc.name = path.stem().string();
    desc.path = fs::absolute(path).string();
    desc.source = "file";
  }
  registry.upsert_dataset(desc);
  return desc.name;
}

// ---------------------------------------------------------------- pipeline

Pipeline::Pipeline(Registry registry, LlmClient& llm, WorkflowOptions options)
    : registry_(std::move(registry)), llm_(llm), options_(std::move(options)) {
  for (const auto& a : kAgents) {
    AgentState s;
    s.agent = a;
    states_[a] = s;
  }
}

std::shared_ptr<const DataSplit> Pipeline::split_for(const std::string& dataset) {
  if (auto it = splits_.find(dataset); it != splits_.end()) return it->second;
  const auto desc = registry_.find_dataset(dataset);
  if (!desc) throw Error(ErrorCode::kNotFound, "dataset '" + dataset + "' is not registered");
  auto split = std::make_shared<const DataSplit>(prepare_split(materialize(*desc)));
  splits_[dataset] = split;
  return split;
}

TaskSpec Pipeline::understand(const std::string& query) {
  const std::vector<std::string> names = registry_.task_names();
  const std::string q(trim(query));
  if (q.empty()) throw Error(ErrorCode::kOutOfScope, "empty query; " + supported_list(names));

  std::vector<std::string> known;
  std::map<std::string, std::string> parent;
  std::string descriptions;
  for (const auto& t : registry_.tasks()) {
    known.push_back(t.name);
    parent[t.name] = t.name;
    descriptions += "- " + t.name + ": " + t.description;
    if (!t.subtasks.empty()) descriptions += " Subtasks: " + join(t.subtasks, ", ") + ".";
    descriptions += "\n";
    for (const auto& s : t.subtasks) {
      known.push_back(s);
      parent[s] = t.name;
    }
  }
  PromptSlots slots;
  slots.text["TASK_DESCRIPTION"] = descriptions;
  slots.text["RAW_INSTRUCT"] = q;
  ChatRequest req;
  req.template_name = std::string(templates::kUnderstand);
  req.context = {{"query", q}, {"tasks", names}};

  AgentState& state = states_.at("understanding");
  std::string reply;
  try {
    req.messages = render(prompt_template(templates::kUnderstand), slots, state.note_list());
    reply = llm_.complete(req);
  } catch (const Error& e) {
    state.remember({{"query", q}, {"error", e.what()}});
    throw Error(ErrorCode::kOutOfScope, std::string("the query could not be understood (") + e.what() + "); " +
                                            supported_list(names));
  }
  std::string name;
  try {
    name = parse_task_name(reply, known);
  } catch (const Error&) {
    state.remember({{"query", q}, {"reply", reply}, {"task", nullptr}});
    throw Error(ErrorCode::kOutOfScope,
                "'" + std::string(trim(reply)) + "' is not a supported task; " + supported_list(names));
  }
  state.remember({{"query", q}, {"reply", reply}, {"task", parent[name]}});
  TaskSpec spec;
  spec.task_name = parent[name];
  if (name != spec.task_name) spec.subtask = name;
  spec.dataset_hint = options_.data;
  return spec;
}

std::string Pipeline::verify(const ExecutionPlan& plan) {
  try {
    const auto task = registry_.find_task(plan.task);
    if (!task) return "task '" + plan.task + "' is not registered";
    const auto model = registry_.find_model(plan.model);
    if (!model) return "model '" + plan.model + "' is not registered";
    if (plan.stages.empty()) return "no optimization stage applies";
    const auto split = split_for(plan.dataset);

    // Dry run on a small sample with a short budget.
    const std::size_t n = options_.verify_trajectories;
    auto head = [](const Dataset& ds, std::size_t count) {
      std::vector<Trajectory> trajs(ds.trajectories.begin(),
                                    ds.trajectories.begin() + std::min(count, ds.trajectories.size()));
      return with_trajectories(ds, std::move(trajs));
    };
    auto sample = std::make_shared<DataSplit>();
    sample->train = head(split->train, n);
    sample->val = head(split->val, std::max<std::size_t>(1, n / 4));
    sample->test = head(split->test, std::max<std::size_t>(1, n / 4));
    sample->ratios = split->ratios;

    TrainReport report;
    if (model->binding.kind == TrainerBinding::Kind::kLlm) {
      OptimSettings s = options_.settings;
      s.prompt_items = 2;
      Evaluator ev(OptimTarget{*task, *model, sample, TrainerConfig{}}, s, &llm_);
      report = ev.score_prompt({}, nullptr);
    } else {
      TrainRequest req;
      req.task = task->name;
      req.split = sample;
      req.config = load_model_config(*model);
      req.seed = options_.settings.seed;
      req.metric = task->metric;
      req.direction = task->direction;
      req.budget_s = options_.verify_budget_s;
      report = handle_train_request(req, model->binding);
    }
    if (!report.ok()) return report.error;
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

ExecutionPlan Pipeline::plan(const TaskSpec& spec) {
  AgentState& state = states_.at("planning");
  std::vector<Candidate> candidates;
  try {
    candidates = registry_.match(spec);
  } catch (const Error& e) {
    state.remember({{"task", spec.task_name}, {"error", e.what()}});
    throw Error(ErrorCode::kPlanningExhausted, e.detail());
  }
  std::vector<std::string> failures;
  const std::size_t attempts = std::min<std::size_t>(candidates.size(), 1 + std::max(0, options_.max_plan_retries));
  for (std::size_t i = 0; i < attempts; ++i) {
    const Candidate& c = candidates[i];
    ExecutionPlan p;
    p.task = spec.task_name;
    p.dataset = c.dataset.name;
    p.model = c.model.name;
    p.stages = stages_for_kind(registry_.stages_for(spec.task_name, c.dataset.kind, c.model.binding.kind),
                               c.dataset.kind);
    p.criteria = options_.settings.criteria;
    p.rationale = "Model " + c.model.name + (c.verified ? " is verified on " : " supports ") + c.dataset.name +
                  " for " + spec.task_name + "; stages from the " + std::string(to_string(c.dataset.kind)) +
                  " policy.";
    const std::string error = verify(p);
    if (error.empty()) {
      p.verified = true;
      p.regenerations = static_cast<int>(i);
      p.rejected = failures;
      state.remember({{"plan", p.to_json()}, {"feedback", "verified"}});
      return p;
    }
    failures.push_back("model '" + p.model + "' on dataset '" + p.dataset + "': " + error);
    state.remember({{"plan", p.to_json()}, {"feedback", failures.back()}});
  }
  throw Error(ErrorCode::kPlanningExhausted,
              "no verified plan after " + std::to_string(attempts) + " candidate(s): " + join(failures, "; "));
}

ExecutionPlan Pipeline::plan_explicit(const std::string& task, const std::string& model, const std::string& dataset,
                                      std::vector<std::string> stages) {
  AgentState& state = states_.at("planning");
  ExecutionPlan p;
  p.task = task;
  p.model = model;
  p.dataset = dataset;
  p.stages = std::move(stages);
  p.criteria = options_.settings.criteria;
  p.rationale = "explicit selection";
  std::string error;
  const auto m = registry_.find_model(model);
  if (dataset.empty()) {
    TaskSpec spec;
    spec.task_name = task;
    try {
      for (const auto& c : registry_.match(spec)) {
        if (c.model.name == model) {
          p.dataset = c.dataset.name;
          break;
        }
      }
    } catch (const Error& e) {
      error = e.detail();
    }
  }
  if (error.empty() && m && !m->supports_task(task)) error = "model '" + model + "' does not support " + task;
  if (error.empty() && p.dataset.empty()) error = "no dataset fits task '" + task + "' and model '" + model + "'";
  if (error.empty()) error = verify(p);
  if (!error.empty()) {
    state.remember({{"plan", p.to_json()}, {"feedback", error}});
    throw Error(ErrorCode::kPlanningExhausted, "model '" + model + "' on dataset '" + p.dataset + "': " + error);
  }
  p.verified = true;
  state.remember({{"plan", p.to_json()}, {"feedback", "verified"}});
  return p;
}

OptimizationResult Pipeline::execute(const ExecutionPlan& plan, MemoryStore& memory) {
  OptimizationResult result;
  AgentState& state = states_.at("optimization");
  try {
    const auto task = registry_.find_task(plan.task);
    const auto model = registry_.find_model(plan.model);
    if (!task || !model) throw Error(ErrorCode::kNotFound, "plan names an unregistered task or model");
    OptimTarget target;
    target.task = *task;
    target.model = *model;
    target.split = split_for(plan.dataset);
    if (model->binding.kind != TrainerBinding::Kind::kLlm) target.base_config = load_model_config(*model);
    OptimSettings settings = options_.settings;
    settings.criteria = plan.criteria;
    Optimizer optimizer(std::move(target), llm_, memory, settings);
    optimizer.set_prompt_notes(state.note_list());
    optimizer.run(plan.stages);
    optimizer.finalize();
    result = optimizer.result();
  } catch (const std::exception& e) {
    result.notes.push_back(std::string("execution failed: ") + e.what());
    for (const auto& r : memory.long_term()) {
      if (r.stage == Stage::kBase && r.ok()) {
        result.origin_ok = true;
        result.origin_score = result.best_score = r.score;
      }
    }
  }
  state.remember({{"plan", plan.to_json()},
                  {"best_score", std::isfinite(result.best_score) ? json(result.best_score) : json(nullptr)},
                  {"delta", result.delta}});
  Outcome outcome;
  outcome.success = result.origin_ok && result.notes.empty();
  outcome.summary = "optimization of " + plan.model + " on " + plan.dataset;
  outcome.failures = result.notes;
  reflect(state, outcome, llm_);
  return result;
}

json Pipeline::run_inputs(const std::string& kind, const std::string& text) const {
  const auto& s = options_.settings;
  return json{{"kind", kind},
              {"text", text},
              {"data", options_.data},
              {"seed", s.seed},
              {"memory_size", s.memory_size},
              {"thought_steps", s.thought_steps},
              {"max_rounds", s.criteria.max_rounds},
              {"max_cycles", s.criteria.max_cycles},
              {"patience", s.criteria.patience},
              {"epsilon", s.criteria.epsilon},
              {"backend", llm_.backend().name()},
              {"llm_model", llm_.params().model}};
}

RunOutcome Pipeline::finish_run(RunOutcome out, const std::string& query, const ExecutionPlan& plan) {
  ExperimentStore store(options_.out_dir);
  const std::string& id = out.experiment_id;
  store.write_plan(id, plan);
  MemoryStore memory = MemoryStore::open(store.records_path(id), options_.settings.memory_size);
  OptimizationResult result = execute(plan, memory);
  store.write_result(id, result);

  const auto task = registry_.find_task(plan.task);
  SummaryContext ctx;
  ctx.query = query;
  ctx.task = plan.task;
  ctx.dataset = plan.dataset;
  ctx.model = plan.model;
  ctx.metric = task ? task->metric : "";
  ctx.direction = task ? task->direction : MetricDirection::kHigherBetter;
  ctx.stages = plan.stages;
  ctx.artifacts = {{"records", "records.jsonl"}, {"best", "best.json"}, {"llm_log", "llm_log.jsonl"}};
  SummaryReport report = summarize(result, memory.long_term(), ctx);
  store.write_report(id, report);
  states_.at("summary").remember({{"experiment", id}, {"delta", report.delta}});

  out.exit_code = kExitOk;
  out.message = "experiment " + id + ": " + ctx.metric + " " +
                (report.origin ? format_fixed(*report.origin, 4) : std::string("n/a")) + " -> " +
                (report.final_score ? format_fixed(*report.final_score, 4) : std::string("n/a")) + " (" +
                percent(report.delta) + ")";
  out.plan = plan;
  out.result = std::move(result);
  out.report = std::move(report);
  return out;
}

RunOutcome Pipeline::run(const std::string& query) {
  RunOutcome out;
  try {
    options_.data = resolve_data(registry_, options_.data);
    ExperimentStore store(options_.out_dir);
    out.experiment_id = ExperimentStore::experiment_id(run_inputs("run", query));
    out.experiment_dir = store.create(out.experiment_id);
    llm_.log().set_path(store.llm_log_path(out.experiment_id));
    store.write_query(out.experiment_id, query);

    try {
      out.task = understand(query);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOutOfScope) throw;
      out.exit_code = kExitOutOfScope;
      out.message = e.detail();
      llm_.log().set_path({});
      return out;
    }
    ExecutionPlan plan;
    try {
      plan = this->plan(*out.task);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPlanningExhausted) throw;
      Outcome outcome{false, "planning for " + out.task->task_name, {e.detail()}};
      reflect(states_.at("planning"), outcome, llm_);
      out.exit_code = kExitPlanningExhausted;
      out.message = e.detail();
      llm_.log().set_path({});
      return out;
    }
    out = finish_run(std::move(out), query, plan);
  } catch (const Error& e) {
    out.exit_code = e.code() == ErrorCode::kIo || e.code() == ErrorCode::kNotFound ? kExitIo : 1;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.message = e.what();
  }
  llm_.log().set_path({});
  return out;
}

RunOutcome Pipeline::optimize(const std::string& task, const std::string& model,
                              const std::vector<std::string>& stages) {
  RunOutcome out;
  try {
    options_.data = resolve_data(registry_, options_.data);
    ExperimentStore store(options_.out_dir);
    const std::string text = task + " " + model + " " + join(stages, ",");
    out.experiment_id = ExperimentStore::experiment_id(run_inputs("optimize", text));
    out.experiment_dir = store.create(out.experiment_id);
    llm_.log().set_path(store.llm_log_path(out.experiment_id));
    store.write_query(out.experiment_id, text);
    TaskSpec spec;
    spec.task_name = task;
    spec.dataset_hint = options_.data;
    out.task = spec;
    ExecutionPlan plan;
    try {
      plan = plan_explicit(task, model, options_.data, stages);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kPlanningExhausted) throw;
      out.exit_code = kExitPlanningExhausted;
      out.message = e.detail();
      llm_.log().set_path({});
      return out;
    }
    out = finish_run(std::move(out), text, plan);
  } catch (const Error& e) {
    out.exit_code = e.code() == ErrorCode::kIo || e.code() == ErrorCode::kNotFound ? kExitIo : 1;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = 1;
    out.message = e.what();
  }
  llm_.log().set_path({});
  return out;
}

}  // namespace trajagent
