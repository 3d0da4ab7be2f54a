#pragma once

#include <cstddef>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trajagent/data.hpp"
#include "trajagent/metrics.hpp"

namespace trajagent {

struct TaskDescriptor {
  std::string name;  // canonical, e.g. Next_Location_Prediction
  std::string description;
  std::vector<std::string> subtasks;
  TrajectoryKind required_kind = TrajectoryKind::kCheckin;
  std::string metric;  // e.g. "Acc@5"
  MetricDirection direction = MetricDirection::kHigherBetter;
};

struct TrainerBinding {
  enum class Kind {
    kNative,    // in-process trainer; target names it ("markov", "tul")
    kExternal,  // child process speaking the trainer wire protocol; target is the command
    kLlm,       // the chat model itself acts as the predictor
  };
  Kind kind = Kind::kNative;
  std::string target;

  friend bool operator==(const TrainerBinding&, const TrainerBinding&) = default;
};

std::string_view to_string(TrainerBinding::Kind kind);

struct ModelDescriptor {
  std::string name;
  std::vector<std::string> tasks;
  std::vector<TrajectoryKind> kinds;
  TrainerBinding binding;
  std::string config_path;  // file path or "builtin:<trainer>"
  std::vector<std::string> verified_datasets;
  std::string description;

  bool supports_task(std::string_view task) const;
  bool supports_kind(TrajectoryKind kind) const;
  bool verified_on(std::string_view dataset) const;
};

// Which optimization stages a plan enables, keyed by task and data kind.
// "*" matches any task; an unset binding matches any trainer binding.
struct StagePolicy {
  std::string task = "*";
  std::optional<TrajectoryKind> kind;
  std::optional<TrainerBinding::Kind> binding;
  std::vector<std::string> stages;  // subset of DA, PO, PRO, JO
};

struct TaskSpec {
  std::string task_name;
  std::string subtask;
  std::string dataset_hint;
  std::string metric_hint;
};

struct Candidate {
  DatasetDescriptor dataset;
  ModelDescriptor model;
  bool verified = false;
};

nlohmann::json to_json(const TaskDescriptor& t);
nlohmann::json to_json(const ModelDescriptor& m);
nlohmann::json to_json(const DatasetDescriptor& d);
nlohmann::json to_json(const StagePolicy& p);
TaskDescriptor task_from_json(const nlohmann::json& j);
ModelDescriptor model_from_json(const nlohmann::json& j);
DatasetDescriptor dataset_from_json(const nlohmann::json& j);
StagePolicy policy_from_json(const nlohmann::json& j);

// Append-mostly catalogue of tasks, models, datasets and stage policies.
// Reads take a shared lock, registration an exclusive one.
class Registry {
 public:
  Registry() = default;
  Registry(const Registry& other);
  Registry& operator=(const Registry& other);

  // Each throws Error(kDuplicateName) on a repeated name and
  // Error(kValidationError) when the descriptor breaks an invariant.
  void add_task(TaskDescriptor task);
  void add_model(ModelDescriptor model);
  void add_dataset(DatasetDescriptor dataset);
  void add_policy(StagePolicy policy);
  // Replaces an existing dataset descriptor or appends a new one.
  void upsert_dataset(DatasetDescriptor dataset);

  std::optional<TaskDescriptor> find_task(std::string_view name) const;
  std::optional<ModelDescriptor> find_model(std::string_view name) const;
  std::optional<DatasetDescriptor> find_dataset(std::string_view name) const;

  std::vector<TaskDescriptor> tasks() const;
  std::vector<ModelDescriptor> models() const;
  std::vector<DatasetDescriptor> datasets() const;
  std::vector<StagePolicy> policies() const;
  std::vector<std::string> task_names() const;

  // Candidates whose model supports the task and whose dataset kind matches
  // both the task and the model; verified pairs first, then registration
  // order (model, then dataset). Throws Error(kNoCandidate).
  std::vector<Candidate> match(const TaskSpec& task) const;

  // Stages for a task/kind/binding: the last matching policy wins, with
  // more specific entries conventionally registered after wildcards.
  std::vector<std::string> stages_for(std::string_view task, TrajectoryKind kind,
                                      TrainerBinding::Kind binding) const;

  // registry/{tasks,models,datasets}/<name>.json plus registry/policies.json.
  static Registry load(const std::string& dir);
  void save(const std::string& dir) const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<TaskDescriptor> tasks_;
  std::vector<ModelDescriptor> models_;
  std::vector<DatasetDescriptor> datasets_;
  std::vector<StagePolicy> policies_;
};

// Built-in catalogue: the supported tasks, the native and LLM-backed models,
// the synthetic benchmark datasets and the default stage policy table.
Registry default_registry();

}  // namespace trajagent
