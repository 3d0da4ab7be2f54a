#include "trajagent/registry.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>

#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(TrainerBinding::Kind kind) {
  switch (kind) {
    case TrainerBinding::Kind::kNative: return "native";
    case TrainerBinding::Kind::kExternal: return "external";
    case TrainerBinding::Kind::kLlm: return "llm";
  }
  return "native";
}

namespace {

TrainerBinding::Kind parse_binding_kind(std::string_view text) {
  if (text == "native") return TrainerBinding::Kind::kNative;
  if (text == "external") return TrainerBinding::Kind::kExternal;
  if (text == "llm") return TrainerBinding::Kind::kLlm;
  throw Error(ErrorCode::kValidationError, "unknown trainer binding '" + std::string(text) + "'");
}

bool valid_stage(std::string_view s) { return s == "DA" || s == "PO" || s == "PRO" || s == "JO"; }

}  // namespace

bool ModelDescriptor::supports_task(std::string_view task) const {
  return std::find(tasks.begin(), tasks.end(), task) != tasks.end();
}

bool ModelDescriptor::supports_kind(TrajectoryKind kind) const {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

bool ModelDescriptor::verified_on(std::string_view dataset) const {
  return std::find(verified_datasets.begin(), verified_datasets.end(), dataset) !=
         verified_datasets.end();
}

json to_json(const TaskDescriptor& t) {
  return json{{"name", t.name},
              {"description", t.description},
              {"subtasks", t.subtasks},
              {"required_kind", to_string(t.required_kind)},
              {"metric", t.metric},
              {"direction", to_string(t.direction)}};
}

json to_json(const ModelDescriptor& m) {
  json kinds = json::array();
  for (auto k : m.kinds) kinds.push_back(to_string(k));
  return json{{"name", m.name},
              {"tasks", m.tasks},
              {"kinds", kinds},
              {"binding", {{"kind", to_string(m.binding.kind)}, {"target", m.binding.target}}},
              {"config_path", m.config_path},
              {"verified_datasets", m.verified_datasets},
              {"description", m.description}};
}

json to_json(const DatasetDescriptor& d) {
  return json{{"name", d.name},          {"kind", to_string(d.kind)},
              {"stats_summary", d.stats_summary}, {"region", d.region},
              {"source", d.source},      {"path", d.path}};
}

json to_json(const StagePolicy& p) {
  json j{{"task", p.task}, {"stages", p.stages}};
  j["kind"] = p.kind ? json(to_string(*p.kind)) : json(nullptr);
  j["binding"] = p.binding ? json(to_string(*p.binding)) : json(nullptr);
  return j;
}

TaskDescriptor task_from_json(const json& j) {
  TaskDescriptor t;
  t.name = j.at("name").get<std::string>();
  t.description = j.value("description", "");
  t.subtasks = j.value("subtasks", std::vector<std::string>{});
  t.required_kind = parse_kind(j.at("required_kind").get<std::string>());
  t.metric = j.at("metric").get<std::string>();
  t.direction = parse_direction(j.value("direction", "higher_better"));
  return t;
}

ModelDescriptor model_from_json(const json& j) {
  ModelDescriptor m;
  m.name = j.at("name").get<std::string>();
  m.tasks = j.at("tasks").get<std::vector<std::string>>();
  for (const auto& k : j.at("kinds")) m.kinds.push_back(parse_kind(k.get<std::string>()));
  const auto& b = j.at("binding");
  m.binding.kind = parse_binding_kind(b.at("kind").get<std::string>());
  m.binding.target = b.value("target", "");
  m.config_path = j.value("config_path", "");
  m.verified_datasets = j.value("verified_datasets", std::vector<std::string>{});
  m.description = j.value("description", "");
  return m;
}

DatasetDescriptor dataset_from_json(const json& j) {
  DatasetDescriptor d;
  d.name = j.at("name").get<std::string>();
  d.kind = parse_kind(j.at("kind").get<std::string>());
  d.stats_summary = j.value("stats_summary", "");
  d.region = j.value("region", "");
  d.source = j.value("source", "");
  d.path = j.value("path", "");
  return d;
}

StagePolicy policy_from_json(const json& j) {
  StagePolicy p;
  p.task = j.value("task", "*");
  if (j.contains("kind") && !j["kind"].is_null()) p.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("binding") && !j["binding"].is_null()) {
    p.binding = parse_binding_kind(j["binding"].get<std::string>());
  }
  p.stages = j.at("stages").get<std::vector<std::string>>();
  return p;
}

Registry::Registry(const Registry& other) {
  std::shared_lock lock(other.mu_);
  tasks_ = other.tasks_;
  models_ = other.models_;
  datasets_ = other.datasets_;
  policies_ = other.policies_;
}

Registry& Registry::operator=(const Registry& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  tasks_ = other.tasks_;
  models_ = other.models_;
  datasets_ = other.datasets_;
  policies_ = other.policies_;
  return *this;
}

void Registry::add_task(TaskDescriptor task) {
  if (task.name.empty()) throw Error(ErrorCode::kValidationError, "task without a name");
  if (!is_known_metric(task.metric)) {
    throw Error(ErrorCode::kValidationError, "task '" + task.name + "' uses unknown metric '" + task.metric + "'");
  }
  std::unique_lock lock(mu_);
  for (const auto& t : tasks_) {
    if (t.name == task.name) throw Error(ErrorCode::kDuplicateName, "task '" + task.name + "'");
  }
  tasks_.push_back(std::move(task));
}

void Registry::add_model(ModelDescriptor model) {
  if (model.name.empty()) throw Error(ErrorCode::kValidationError, "model without a name");
  std::unique_lock lock(mu_);
  for (const auto& m : models_) {
    if (m.name == model.name) throw Error(ErrorCode::kDuplicateName, "model '" + model.name + "'");
  }
  for (const auto& task : model.tasks) {
    const bool known = std::any_of(tasks_.begin(), tasks_.end(), [&](const TaskDescriptor& t) { return t.name == task; });
    if (!known) {
      throw Error(ErrorCode::kValidationError, "model '" + model.name + "' references unknown task '" + task + "'");
    }
  }
  models_.push_back(std::move(model));
}

void Registry::add_dataset(DatasetDescriptor dataset) {
  if (dataset.name.empty()) throw Error(ErrorCode::kValidationError, "dataset without a name");
  std::unique_lock lock(mu_);
  for (const auto& d : datasets_) {
    if (d.name == dataset.name) throw Error(ErrorCode::kDuplicateName, "dataset '" + dataset.name + "'");
  }
  datasets_.push_back(std::move(dataset));
}

void Registry::upsert_dataset(DatasetDescriptor dataset) {
  std::unique_lock lock(mu_);
  for (auto& d : datasets_) {
    if (d.name == dataset.name) {
      d = std::move(dataset);
      return;
    }
  }
  datasets_.push_back(std::move(dataset));
}

void Registry::add_policy(StagePolicy policy) {
  if (policy.stages.empty()) throw Error(ErrorCode::kValidationError, "stage policy with no stages");
  for (const auto& s : policy.stages) {
    if (!valid_stage(s)) throw Error(ErrorCode::kValidationError, "unknown stage '" + s + "'");
  }
  std::unique_lock lock(mu_);
  policies_.push_back(std::move(policy));
}

std::optional<TaskDescriptor> Registry::find_task(std::string_view name) const {
  std::shared_lock lock(mu_);
  for (const auto& t : tasks_) {
    if (t.name == name) return t;
  }
  return std::nullopt;
}

std::optional<ModelDescriptor> Registry::find_model(std::string_view name) const {
  std::shared_lock lock(mu_);
  for (const auto& m : models_) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

std::optional<DatasetDescriptor> Registry::find_dataset(std::string_view name) const {
  std::shared_lock lock(mu_);
  for (const auto& d : datasets_) {
    if (d.name == name) return d;
  }
  return std::nullopt;
}

std::vector<TaskDescriptor> Registry::tasks() const {
  std::shared_lock lock(mu_);
  return tasks_;
}

std::vector<ModelDescriptor> Registry::models() const {
  std::shared_lock lock(mu_);
  return models_;
}

std::vector<DatasetDescriptor> Registry::datasets() const {
  std::shared_lock lock(mu_);
  return datasets_;
}

std::vector<StagePolicy> Registry::policies() const {
  std::shared_lock lock(mu_);
  return policies_;
}

std::vector<std::string> Registry::task_names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> names;
  for (const auto& t : tasks_) names.push_back(t.name);
  return names;
}

std::vector<Candidate> Registry::match(const TaskSpec& spec) const {
  std::shared_lock lock(mu_);
  const auto task_it = std::find_if(tasks_.begin(), tasks_.end(),
                                    [&](const TaskDescriptor& t) { return t.name == spec.task_name; });
  if (task_it == tasks_.end()) {
    throw Error(ErrorCode::kNoCandidate, "task '" + spec.task_name + "' is not registered");
  }
  std::vector<Candidate> out;
  for (const auto& m : models_) {
    if (!m.supports_task(spec.task_name) || !m.supports_kind(task_it->required_kind)) continue;
    for (const auto& d : datasets_) {
      if (d.kind != task_it->required_kind) continue;
      if (!spec.dataset_hint.empty() && d.name != spec.dataset_hint) continue;
      out.push_back(Candidate{d, m, m.verified_on(d.name)});
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoCandidate, "no (dataset, model) pair supports task '" + spec.task_name + "' on " +
                                             std::string(to_string(task_it->required_kind)) + " data");
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Candidate& a, const Candidate& b) { return a.verified && !b.verified; });
  return out;
}

std::vector<std::string> Registry::stages_for(std::string_view task, TrajectoryKind kind,
                                              TrainerBinding::Kind binding) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> stages;
  for (const auto& p : policies_) {
    if (p.task != "*" && p.task != task) continue;
    if (p.kind && *p.kind != kind) continue;
    if (p.binding && *p.binding != binding) continue;
    stages = p.stages;
  }
  return stages;
}

namespace {

std::vector<json> read_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<json> out;
  for (const auto& f : files) {
    try {
      out.push_back(json::parse(read_file(f.string())));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kValidationError, f.string() + ": " + e.what());
    }
  }
  return out;
}

// Manifests carry an optional integer "order" so registration order survives
// the filesystem's name ordering.
void sort_by_order(std::vector<json>& docs) {
  std::stable_sort(docs.begin(), docs.end(), [](const json& a, const json& b) {
    return a.value("order", 0) < b.value("order", 0);
  });
}

}  // namespace

Registry Registry::load(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, "registry directory " + dir + " not found");
  Registry r;
  try {
    auto tasks = read_dir(root / "tasks");
    auto models = read_dir(root / "models");
    auto datasets = read_dir(root / "datasets");
    sort_by_order(tasks);
    sort_by_order(models);
    sort_by_order(datasets);
    for (const auto& j : tasks) r.add_task(task_from_json(j));
    for (const auto& j : models) r.add_model(model_from_json(j));
    for (const auto& j : datasets) r.add_dataset(dataset_from_json(j));
    if (fs::exists(root / "policies.json")) {
      for (const auto& j : json::parse(read_file((root / "policies.json").string()))) {
        r.add_policy(policy_from_json(j));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidationError, std::string("registry manifest: ") + e.what());
  }
  return r;
}

void Registry::save(const std::string& dir) const {
  std::shared_lock lock(mu_);
  const fs::path root(dir);
  auto write = [&](const fs::path& sub, const std::string& name, json doc, std::size_t order) {
    doc["order"] = order;
    write_file_atomic((root / sub / (name + ".json")).string(), doc.dump(2) + "\n");
  };
  for (std::size_t i = 0; i < tasks_.size(); ++i) write("tasks", tasks_[i].name, to_json(tasks_[i]), i);
  for (std::size_t i = 0; i < models_.size(); ++i) write("models", models_[i].name, to_json(models_[i]), i);
  for (std::size_t i = 0; i < datasets_.size(); ++i) {
    write("datasets", datasets_[i].name, to_json(datasets_[i]), i);
  }
  json policies = json::array();
  for (const auto& p : policies_) policies.push_back(to_json(p));
  write_file_atomic((root / "policies.json").string(), policies.dump(2) + "\n");
}

Registry default_registry() {
  Registry r;
  using K = TrajectoryKind;
  r.add_task({"Next_Location_Prediction",
              "Given the recent check-in history of a user, rank the locations the user is most likely to "
              "visit next. Scored by Acc@5 on held-out sessions.",
              {"Next_POI_Recommendation"},
              K::kCheckin,
              "Acc@5",
              MetricDirection::kHigherBetter});
  r.add_task({"Trajectory_User_Linkage",
              "Given an anonymous trajectory, identify which known user produced it. Scored by Hit@5.",
              {},
              K::kCheckin,
              "Hit@5",
              MetricDirection::kHigherBetter});
  r.add_task({"Trajectory_Completion",
              "Recover the missing or next grid cell of a dense GPS trajectory from the points observed so far. "
              "Scored by Acc@1.",
              {"Trajectory_Recovery"},
              K::kGps,
              "Acc@1",
              MetricDirection::kHigherBetter});
  r.add_task({"Travel_Time_Estimation",
              "Estimate the travel time of a GPS trajectory between its origin and destination. Scored by MAE.",
              {},
              K::kGps,
              "MAE",
              MetricDirection::kLowerBetter});
  r.add_task({"Trajectory_Generation",
              "Generate synthetic trajectories whose location distribution matches real data. Scored by JSD.",
              {},
              K::kCheckin,
              "JSD",
              MetricDirection::kLowerBetter});
  r.add_task({"Map_Matching",
              "Match each GPS point of a trajectory to the road segment it was recorded on. Scored by Acc_m.",
              {},
              K::kGps,
              "Acc_m",
              MetricDirection::kHigherBetter});
  r.add_task({"Mobility_Intent_Prediction",
              "Infer the purpose of each check-in of a user trajectory. Scored by Acc_i.",
              {},
              K::kCheckin,
              "Acc_i",
              MetricDirection::kHigherBetter});

  r.add_model({"Markov",
               {"Next_Location_Prediction", "Trajectory_Completion"},
               {K::kCheckin, K::kGps},
               {TrainerBinding::Kind::kNative, "markov"},
               "builtin:markov",
               {"Synthetic_Checkin", "Synthetic_GPS"},
               "Variable-order Markov chain over location indices with additive smoothing, optional per-user "
               "transition mixing and skip transitions; backs off to shorter contexts and global popularity."});
  r.add_model({"TulProfile",
               {"Trajectory_User_Linkage"},
               {K::kCheckin},
               {TrainerBinding::Kind::kNative, "tul"},
               "builtin:tul",
               {"Synthetic_Checkin"},
               "Per-user location-frequency profiles (optionally tf-idf weighted) ranked by cosine similarity."});
  r.add_model({"LLM_ZS",
               {"Next_Location_Prediction"},
               {K::kCheckin},
               {TrainerBinding::Kind::kLlm, "predict"},
               "",
               {},
               "The chat model ranks next locations directly from a prompt holding the visit history; improved "
               "by few-shot prompt optimization."});

  r.add_dataset({"Synthetic_Checkin", K::kCheckin,
                 "50 entities, 200 locations, periodic per-entity routines with 30% dropout", "synthetic",
                 "seeded generator", "synthetic:checkin"});
  r.add_dataset({"Synthetic_GPS", K::kGps, "dense 15 s GPS traces on a grid", "synthetic", "seeded generator",
                 "synthetic:gps"});

  r.add_policy({"*", K::kCheckin, std::nullopt, {"DA", "PO", "JO"}});
  r.add_policy({"*", K::kGps, std::nullopt, {"PO"}});
  r.add_policy({"*", std::nullopt, TrainerBinding::Kind::kLlm, {"PRO"}});
  return r;
}

}  // namespace trajagent
