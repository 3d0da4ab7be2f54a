#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajagent/augment.hpp"
#include "trajagent/config.hpp"
#include "trajagent/data.hpp"
#include "trajagent/llm.hpp"
#include "trajagent/memory.hpp"
#include "trajagent/registry.hpp"
#include "trajagent/trainer.hpp"

namespace trajagent {

inline constexpr double kNoScore = -std::numeric_limits<double>::infinity();

struct StopCriteria {
  int max_rounds = 20;   // per stage loop
  int patience = 3;      // rounds without relative improvement > epsilon
  double epsilon = 0.005;
  int max_cycles = 2;    // joint schedule
  std::optional<double> target;

  // Throws Error(kValidationError).
  void validate() const;
};

struct OptimSettings {
  StopCriteria criteria;
  std::size_t memory_size = kDefaultMemoryWindow;
  int thought_steps = 10;
  int parse_retries = 3;  // total attempts per proposal
  std::uint64_t seed = 0;
  double trial_budget_s = 120.0;
  std::size_t memory_budget = 8000;
  std::size_t prompt_items = 60;  // evaluation items for LLM-as-model scoring
};

struct OptimTarget {
  TaskDescriptor task;
  ModelDescriptor model;
  std::shared_ptr<const DataSplit> split;
  TrainerConfig base_config;  // the model's default config
};

struct OptimAction {
  Stage stage = Stage::kDA;
  bool failed = false;
  std::string failure;  // why no valid action was produced
  AugmentPlan plan;                                       // DA
  nlohmann::json config = nlohmann::json::object();       // PO: full value map
  std::vector<std::size_t> examples;                      // PRO: item indices
  std::string text;                                       // reply the action came from

  nlohmann::json to_json() const;
  std::string key() const;
};

// Outcome of scoring one few-shot prompt with the chat model as predictor.
struct PromptItem {
  std::string entity;
  std::vector<std::string> history;
  std::string truth;
};

struct StageOutcome {
  Stage stage = Stage::kDA;
  int cycle = 0;
  int rounds = 0;
  double best_score = kNoScore;
  std::string stop_reason;
};

struct OptimizationResult {
  bool origin_ok = false;
  double origin_score = kNoScore;
  double best_score = kNoScore;
  int best_round = 0;
  double delta = 0.0;
  AugmentPlan best_plan;
  nlohmann::json best_config = nlohmann::json::object();
  std::vector<std::size_t> best_examples;
  std::vector<StageOutcome> stages;
  std::size_t evaluations = 0;
  std::map<std::string, double> final_metrics;  // best pair re-run with test metrics
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// (best - origin) / |origin|; 0 when the origin failed or is zero.
double improvement(double origin, double best, bool origin_ok = true);

// Trains and scores actions the same way for the agent and the searchers.
class Evaluator {
 public:
  Evaluator(OptimTarget target, OptimSettings settings, LlmClient* llm = nullptr);

  bool llm_model() const { return target_.model.binding.kind == TrainerBinding::Kind::kLlm; }
  const OptimTarget& target() const { return target_; }
  const OptimSettings& settings() const { return settings_; }

  // Augments train with `plan` (seeded by the plan itself) and trains with
  // `config` values applied over the base config.
  TrainReport train(const AugmentPlan& plan, const nlohmann::json& config, bool include_test = false);

  const std::vector<PromptItem>& prompt_items();
  // Scores the chat model over the evaluation items with the given
  // demonstrations; per-item outcomes go to `items_out`.
  TrainReport score_prompt(const std::vector<std::size_t>& examples, nlohmann::json* items_out);

  std::size_t trainings() const { return trainings_; }

 private:
  std::shared_ptr<const Dataset> augmented(const AugmentPlan& plan);

  OptimTarget target_;
  OptimSettings settings_;
  LlmClient* llm_;
  std::map<std::string, std::shared_ptr<const Dataset>> cache_;
  std::vector<PromptItem> items_;
  bool items_ready_ = false;
  std::size_t trainings_ = 0;
};

// Fills in a record from a train report.
ExperimentRecord record_from_report(const TrainReport& report);

// The think/act agent over the DA, PO and PRO stages.
class Optimizer {
 public:
  Optimizer(OptimTarget target, LlmClient& llm, MemoryStore& memory, OptimSettings settings = {});

  // Round 0: unmodified data and default config (replayed from the log
  // when present).
  const ExperimentRecord& baseline();

  // Up to thought_steps turns; the last one becomes the guidance.
  // Throws Error(kLlmFailure).
  std::string think(Stage stage);
  OptimAction propose_action(Stage stage, const std::string& guidance);
  // Never throws; failures become failed records. Does not append.
  ExperimentRecord evaluate_action(const OptimAction& action);

  StageOutcome run_stage_loop(Stage stage);
  OptimizationResult run_joint();
  // JO anywhere in `stages` runs the joint schedule; otherwise DA, PO and
  // PRO loops run once each in that order when enabled.
  OptimizationResult run(const std::vector<std::string>& stages);

  OptimizationResult result() const;
  const Evaluator& evaluator() const { return evaluator_; }
  // Pair (plan, config) of the best record.
  const AugmentPlan& best_plan() const { return best_plan_; }
  const nlohmann::json& best_config() const { return best_config_; }
  double best_score() const { return best_score_; }

  // Re-runs the best action with test metrics; stored in result().
  void finalize();

  // Lessons from earlier runs, prepended to every prompt.
  void set_prompt_notes(std::vector<std::string> notes);

 private:
  nlohmann::json think_context(Stage stage, int step, int steps) const;
  std::string characteristics() const;
  std::vector<std::string> memory_lines(Stage stage) const;
  std::vector<std::string> tried_keys(Stage stage) const;
  std::optional<OptimAction> proposal_once(Stage stage, const std::string& guidance,
                                           const std::vector<std::string>& rejected, std::string* error);
  OptimAction pro_action() const;
  void absorb(const ExperimentRecord& r);
  ExperimentRecord next_round(Stage stage);
  ExperimentRecord fresh_round(Stage stage);

  Evaluator evaluator_;
  LlmClient& llm_;
  MemoryStore& memory_;
  OptimSettings settings_;

  bool have_baseline_ = false;
  ExperimentRecord baseline_;
  int next_round_ = 1;
  int cycle_ = 0;
  double best_score_ = kNoScore;
  int best_round_ = 0;
  AugmentPlan best_plan_;
  nlohmann::json best_config_;
  std::vector<std::size_t> best_examples_;
  std::vector<StageOutcome> stages_;
  std::size_t evaluations_ = 0;
  std::map<std::string, double> final_metrics_;
  std::vector<std::string> notes_;
  std::set<std::string> failure_notes_;
  std::vector<std::string> notes_for_prompts_;
};

// Random and grid searchers over the same action spaces, scored by the
// same Evaluator. Records include the round-0 baseline.
struct SearchResult {
  std::vector<ExperimentRecord> records;
  double origin = kNoScore;
  double best = kNoScore;
  // best-so-far after each evaluation (baseline excluded)
  std::vector<double> curve;
};

// DA samples random operator lists with grid parameters; PO samples every
// config entry uniformly from its declared choices.
SearchResult random_search(Evaluator& evaluator, Stage stage, std::size_t budget, std::uint64_t seed);
// Samples a random plan and a random config together, the action space of
// the joint schedule. Records are tagged PO and carry both halves.
SearchResult random_joint_search(Evaluator& evaluator, std::size_t budget, std::uint64_t seed);
// Exhaustive product of `grid` over the base config.
SearchResult grid_search(Evaluator& evaluator, const SearchSpace& grid);

// Best-so-far curve of a record log (baseline excluded).
std::vector<double> best_curve(const std::vector<ExperimentRecord>& records);
// Rows "method,evaluation,score,best" with a header line.
std::string curve_csv(const std::vector<std::pair<std::string, std::vector<ExperimentRecord>>>& runs);

}  // namespace trajagent
