#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajagent/llm.hpp"
#include "trajagent/memory.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/registry.hpp"

namespace trajagent {

struct ExecutionPlan {
  std::string task;
  std::string dataset;
  std::string model;
  std::vector<std::string> stages;  // subset of DA, PO, PRO, JO
  StopCriteria criteria;
  std::string rationale;
  bool verified = false;
  int regenerations = 0;  // candidates rejected before this one
  std::vector<std::string> rejected;  // feedback for each rejected candidate

  nlohmann::json to_json() const;
};

// Per-agent memory of recent events and reflection notes, both bounded with
// oldest-first eviction.
struct AgentState {
  std::string agent;
  std::size_t memory_capacity = 10;
  std::size_t note_capacity = 5;
  std::deque<nlohmann::json> memory;
  std::deque<std::string> notes;

  void remember(nlohmann::json event);
  void add_note(std::string note);
  std::vector<std::string> note_list() const { return {notes.begin(), notes.end()}; }
};

struct Outcome {
  bool success = true;
  std::string summary;
  std::vector<std::string> failures;
};

// One chat turn turning a failed outcome into a note for the agent's later
// prompts. Successful outcomes add nothing; an LLM failure leaves the state
// unchanged. Returns whether a note was added.
bool reflect(AgentState& state, const Outcome& outcome, LlmClient& llm);

struct Milestone {
  int round = 0;
  int cycle = 0;
  Stage stage = Stage::kBase;
  double score = 0.0;  // raw metric value
  std::string action;
};

struct SummaryReport {
  std::string query;
  std::string task;
  std::string dataset;
  std::string model;
  std::string metric;
  MetricDirection direction = MetricDirection::kHigherBetter;
  std::vector<std::string> stages;
  bool origin_ok = false;
  std::optional<double> origin;  // raw metric values
  std::optional<double> final_score;
  double delta = 0.0;
  std::vector<Milestone> path;
  std::size_t evaluations = 0;
  nlohmann::json best_action = nlohmann::json::object();
  std::map<std::string, double> final_metrics;
  std::map<std::string, std::string> artifacts;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

// Context the summary needs beyond the record log.
struct SummaryContext {
  std::string query;
  std::string task;
  std::string dataset;
  std::string model;
  std::string metric;
  MetricDirection direction = MetricDirection::kHigherBetter;
  std::vector<std::string> stages;
  std::map<std::string, std::string> artifacts;
};

// Milestones are round 0 plus every record that set a new best. delta is
// (best - origin) / |origin| over the maximize-normalized record scores.
SummaryReport summarize(const OptimizationResult& result, const std::vector<ExperimentRecord>& records,
                        const SummaryContext& context = {});

struct WorkflowOptions {
  std::string data;  // registered dataset name or a path; empty lets the planner choose
  OptimSettings settings;
  int max_plan_retries = 3;
  double verify_budget_s = 10.0;
  std::size_t verify_trajectories = 40;
  std::string out_dir = "experiments";
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitOutOfScope = 2;
inline constexpr int kExitPlanningExhausted = 3;
inline constexpr int kExitIo = 4;

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::string experiment_id;
  std::string experiment_dir;
  std::optional<TaskSpec> task;
  std::optional<ExecutionPlan> plan;
  std::optional<OptimizationResult> result;
  std::optional<SummaryReport> report;
};

// Registers `data` when it is a path (CSV file or ingest directory) and
// returns the dataset name; registered names pass through. Throws
// Error(kIo) for a path that does not exist.
std::string resolve_data(Registry& registry, const std::string& data);

// Query -> task -> plan -> optimization -> report, with one AgentState per
// agent (understanding, planning, optimization, summary).
class Pipeline {
 public:
  Pipeline(Registry registry, LlmClient& llm, WorkflowOptions options = {});

  // Throws Error(kOutOfScope) listing the supported task names.
  TaskSpec understand(const std::string& query);
  // Throws Error(kPlanningExhausted) carrying every rejected candidate.
  ExecutionPlan plan(const TaskSpec& spec);
  // Plan for an explicit (task, model, dataset), verified the same way.
  ExecutionPlan plan_explicit(const std::string& task, const std::string& model, const std::string& dataset,
                              std::vector<std::string> stages);
  // Never throws; failures become a failed result with notes.
  OptimizationResult execute(const ExecutionPlan& plan, MemoryStore& memory);

  // Full run into an experiment directory. Never throws.
  RunOutcome run(const std::string& query);
  // Optimization of an explicit plan into an experiment directory.
  RunOutcome optimize(const std::string& task, const std::string& model, const std::vector<std::string>& stages);

  const Registry& registry() const { return registry_; }
  AgentState& state(const std::string& agent) { return states_.at(agent); }
  std::vector<std::string> supported_tasks() const { return registry_.task_names(); }
  std::shared_ptr<const DataSplit> split_for(const std::string& dataset);

 private:
  std::string verify(const ExecutionPlan& plan);
  RunOutcome finish_run(RunOutcome outcome, const std::string& query, const ExecutionPlan& plan);
  nlohmann::json run_inputs(const std::string& kind, const std::string& text) const;

  Registry registry_;
  LlmClient& llm_;
  WorkflowOptions options_;
  std::map<std::string, AgentState> states_;
  std::map<std::string, std::shared_ptr<const DataSplit>> splits_;
};

}  // namespace trajagent
