#include "trajagent/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/markov.hpp"
#include "trajagent/subprocess.hpp"
#include "trajagent/tul.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

namespace {

constexpr std::string_view kMarkovConfig =
    "# Markov next-location baseline\n"
    "order = 1  # context length in visits (choices: [1, 2, 3])\n"
    "alpha = 1.0  # additive smoothing mass per location (choices: [0.0, 0.1, 0.5, 1.0, 2.0])\n"
    "user_weight = 0.0  # weight of the entity's own transitions added to the global counts "
    "(choices: [0.0, 0.5, 1.0, 2.0, 5.0, 10.0])\n"
    "skip_weight = 0.0  # weight of transitions that skip one visit, helps with missing check-ins "
    "(choices: [0.0, 0.25, 0.5, 1.0])\n";

constexpr std::string_view kTulConfig =
    "# Trajectory-user linkage by profile similarity\n"
    "use_tfidf = false  # down-weight locations shared by many users (choices: [false, true])\n"
    "sublinear_tf = false  # use 1 + ln(count) instead of raw visit counts (choices: [false, true])\n"
    "min_count = 1  # drop profile entries visited fewer times (choices: [1, 2, 3])\n";

class Deadline {
 public:
  explicit Deadline(double budget_s) : budget_s_(budget_s), start_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void check() const {
    const double e = elapsed();
    if (e > budget_s_) {
      throw Error(ErrorCode::kTimeout, "timeout: budget of " + format_double(budget_s_) + "s exceeded after " +
                                           format_fixed(e, 4) + "s");
    }
  }

 private:
  double budget_s_;
  std::chrono::steady_clock::time_point start_;
};

constexpr Id kUnknown = std::numeric_limits<Id>::max();

double eval_markov(const MarkovModel& model, const Dataset& train, const Dataset& eval, const MetricSpec& spec,
                   const Deadline& deadline) {
  std::vector<Prediction> preds;
  std::vector<Id> truths;
  std::size_t since_check = 0;
  for (const auto& t : eval.trajectories) {
    std::vector<Id> history;
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const auto id = train.vocabulary.find(t.points[i].loc_id);
      if (i > 0) {
        preds.push_back(model.predict_topk(history, spec.k, t.entity_id));
        truths.push_back(id ? *id : kUnknown);
        if (++since_check == 256) {
          deadline.check();
          since_check = 0;
        }
      }
      if (id) history.push_back(*id);
    }
  }
  return topk_rate(preds, truths, spec.k, spec.name).value;
}

double eval_tul(const TulProfileModel& model, const Dataset& eval, const MetricSpec& spec, const Deadline& deadline) {
  std::vector<Prediction> preds;
  std::vector<Id> truths;
  for (const auto& t : eval.trajectories) {
    Id truth = kUnknown;
    try {
      truth = model.user_index(t.entity_id);
    } catch (const Error&) {
      continue;  // user never seen in train
    }
    preds.push_back(model.rank_users(t, spec.k));
    truths.push_back(truth);
    if (preds.size() % 256 == 0) deadline.check();
  }
  return topk_rate(preds, truths, spec.k, spec.name).value;
}

// Runs the native trainer; returns raw val (and test) metric values.
std::map<std::string, double> run_native(const TrainRequest& req, const std::string& target, const DataSplit& split,
                                         const Deadline& deadline) {
  const auto spec = parse_metric(req.metric);
  if (!spec) throw Error(ErrorCode::kUnknownMetric, req.metric);
  if (spec->family != MetricSpec::Family::kAccAtK && spec->family != MetricSpec::Family::kHitAtK) {
    throw Error(ErrorCode::kValidationError, "native trainer '" + target + "' does not report " + req.metric);
  }
  std::map<std::string, double> metrics;
  if (target == "markov") {
    const MarkovModel model = MarkovModel::fit(split.train, MarkovOptions::from_config(req.config));
    deadline.check();
    metrics["val/" + spec->name] = eval_markov(model, split.train, split.val, *spec, deadline);
    if (req.include_test) metrics["test/" + spec->name] = eval_markov(model, split.train, split.test, *spec, deadline);
  } else if (target == "tul") {
    const TulProfileModel model = TulProfileModel::fit(split.train, TulOptions::from_config(req.config));
    deadline.check();
    metrics["val/" + spec->name] = eval_tul(model, split.val, *spec, deadline);
    if (req.include_test) metrics["test/" + spec->name] = eval_tul(model, split.test, *spec, deadline);
  } else {
    throw Error(ErrorCode::kNotFound, "native trainer '" + target + "'");
  }
  deadline.check();
  return metrics;
}

TrainReport error_report(std::string text, double wall) {
  TrainReport r;
  r.status = TrainReport::Status::kError;
  r.error = text.empty() ? "unknown trainer failure" : std::move(text);
  r.wall_time_s = wall;
  return r;
}

TrainReport handle_native(const TrainRequest& req, const std::string& target) {
  const Deadline deadline(req.budget_s);
  try {
    std::shared_ptr<const DataSplit> split = req.split;
    if (!split) split = std::make_shared<DataSplit>(load_split_files({req.train_path, req.val_path, req.test_path}));
    TrainReport r;
    r.metrics = run_native(req, target, *split, deadline);
    const auto spec = parse_metric(req.metric);
    r.score = maximize_normalized(r.metrics.at("val/" + spec->name), req.direction);
    r.status = TrainReport::Status::kOk;
    r.wall_time_s = deadline.elapsed();
    return r;
  } catch (const std::exception& e) {
    return error_report(e.what(), deadline.elapsed());
  }
}

TrainReport handle_external(const TrainRequest& req, const std::string& command) {
  const Deadline deadline(req.budget_s);
  try {
    TempDir dir("trajagent-trainer");
    TrainRequest wire_req = req;
    if (req.split) {
      const auto paths = write_split_files(*req.split, dir.path());
      wire_req.train_path = paths.train;
      wire_req.val_path = paths.val;
      wire_req.test_path = paths.test;
    }
    const std::string line = request_to_wire(wire_req).dump() + "\n";
    const ProcessResult proc = run_process(command, line, req.budget_s, dir.path());
    if (proc.timed_out) {
      return error_report("timeout: trainer exceeded budget of " + format_double(req.budget_s) + "s",
                          deadline.elapsed());
    }
    std::string reply_line;
    std::istringstream lines(proc.out);
    for (std::string l; std::getline(lines, l);) {
      if (!trim(l).empty()) {
        reply_line = l;
        break;
      }
    }
    if (proc.exit_code != 0) {
      std::string text = "trainer exited with code " + std::to_string(proc.exit_code);
      const auto err = trim(proc.err);
      if (!err.empty()) text += ": " + std::string(err.substr(0, 400));
      return error_report(text, deadline.elapsed());
    }
    if (reply_line.empty()) return error_report("malformed reply: trainer wrote nothing", deadline.elapsed());
    json j;
    try {
      j = json::parse(reply_line);
    } catch (const json::exception&) {
      return error_report("malformed reply: not JSON: " + reply_line.substr(0, 200), deadline.elapsed());
    }
    TrainReport r = report_from_wire(j, req.direction);
    if (!r.ok() || r.wall_time_s <= 0) r.wall_time_s = std::max(r.wall_time_s, deadline.elapsed());
    return r;
  } catch (const std::exception& e) {
    return error_report(e.what(), deadline.elapsed());
  }
}

RecordSchema sniff_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::string header;
  std::getline(in, header);
  for (const auto& col : split(header, ',')) {
    if (trim(col) == "loc_id") return RecordSchema::kCheckinCsv;
  }
  return RecordSchema::kGpsCsv;
}

}  // namespace

TrainReport handle_train_request(const TrainRequest& req, const TrainerBinding& binding) {
  switch (binding.kind) {
    case TrainerBinding::Kind::kNative: return handle_native(req, binding.target);
    case TrainerBinding::Kind::kExternal: return handle_external(req, binding.target);
    case TrainerBinding::Kind::kLlm: break;
  }
  return error_report("llm-backed models are scored by the optimizer, not by a trainer", 0.0);
}

json request_to_wire(const TrainRequest& req) {
  return json{{"v", kWireVersion},
              {"task", req.task},
              {"train", req.train_path},
              {"val", req.val_path},
              {"test", req.test_path},
              {"config", req.config.values_json()},
              {"seed", req.seed},
              {"metric", req.metric},
              {"direction", std::string(to_string(req.direction))},
              {"budget_s", req.budget_s}};
}

TrainRequest request_from_wire(const json& j, const TrainerConfig& base) {
  auto fail = [](const std::string& what) -> TrainRequest {
    throw Error(ErrorCode::kValidationFailure, "bad request: " + what);
  };
  if (!j.is_object()) return fail("not an object");
  if (!j.contains("v") || j["v"] != kWireVersion) return fail("unsupported version");
  for (const char* key : {"task", "train", "val", "test", "metric", "direction"}) {
    if (!j.contains(key) || !j[key].is_string()) return fail(std::string("missing string '") + key + "'");
  }
  if (!j.contains("config") || !j["config"].is_object()) return fail("missing object 'config'");
  if (!j.contains("seed") || !j["seed"].is_number_integer()) return fail("missing integer 'seed'");
  if (!j.contains("budget_s") || !j["budget_s"].is_number()) return fail("missing number 'budget_s'");
  TrainRequest req;
  req.task = j["task"];
  req.train_path = j["train"];
  req.val_path = j["val"];
  req.test_path = j["test"];
  req.config = base;
  req.config.apply(j["config"]);
  req.seed = j["seed"].get<std::uint64_t>();
  req.metric = j["metric"];
  if (!is_known_metric(req.metric)) return fail("unknown metric '" + req.metric + "'");
  req.direction = parse_direction(j["direction"].get<std::string>());
  req.budget_s = j["budget_s"];
  req.include_test = true;
  return req;
}

json report_to_wire(const TrainReport& report, double raw_score) {
  if (!report.ok()) return json{{"v", kWireVersion}, {"status", "error"}, {"error", report.error}};
  json metrics = json::object();
  for (const auto& [k, v] : report.metrics) metrics[k] = v;
  return json{{"v", kWireVersion},
              {"status", "ok"},
              {"score", raw_score},
              {"metrics", metrics},
              {"wall_time_s", report.wall_time_s}};
}

TrainReport report_from_wire(const json& j, MetricDirection direction) {
  auto fail = [](const std::string& what) -> TrainReport {
    throw Error(ErrorCode::kValidationFailure, "malformed reply: " + what);
  };
  if (!j.is_object()) return fail("not an object");
  if (!j.contains("v") || j["v"] != kWireVersion) return fail("missing or unsupported 'v'");
  if (!j.contains("status") || !j["status"].is_string()) return fail("missing 'status'");
  TrainReport r;
  const std::string status = j["status"];
  if (status == "error") {
    if (!j.contains("error") || !j["error"].is_string() || j["error"].get<std::string>().empty()) {
      return fail("error reply without error text");
    }
    r.status = TrainReport::Status::kError;
    r.error = j["error"];
    return r;
  }
  if (status != "ok") return fail("unknown status '" + status + "'");
  if (!j.contains("score") || !j["score"].is_number()) return fail("missing numeric 'score'");
  const double score = j["score"];
  if (!std::isfinite(score)) return fail("non-finite score");
  if (!j.contains("metrics") || !j["metrics"].is_object()) return fail("missing object 'metrics'");
  if (!j.contains("wall_time_s") || !j["wall_time_s"].is_number()) return fail("missing numeric 'wall_time_s'");
  for (const auto& [k, v] : j["metrics"].items()) {
    if (!v.is_number()) return fail("metric '" + k + "' is not a number");
    r.metrics[k] = v.get<double>();
  }
  r.status = TrainReport::Status::kOk;
  r.score = maximize_normalized(score, direction);
  r.wall_time_s = j["wall_time_s"];
  return r;
}

int serve_trainer(std::istream& in, std::ostream& out, std::string_view target) {
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  TrainReport report;
  double raw = 0.0;
  try {
    if (trim(line).empty()) throw Error(ErrorCode::kValidationFailure, "bad request: empty input");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::kValidationFailure, "bad request: parse error: not JSON");
    }
    const TrainerConfig base = TrainerConfig::parse(builtin_config_text(target));
    const TrainRequest req = request_from_wire(j, base);
    report = handle_train_request(req, TrainerBinding{TrainerBinding::Kind::kNative, std::string(target)});
    if (report.ok()) raw = report.metrics.at("val/" + parse_metric(req.metric)->name);
  } catch (const std::exception& e) {
    report = error_report(e.what(), 0.0);
  }
  out << report_to_wire(report, raw).dump() << '\n';
  out.flush();
  return out ? 0 : 1;
}

std::string builtin_config_text(std::string_view trainer) {
  if (trainer == "markov") return std::string(kMarkovConfig);
  if (trainer == "tul") return std::string(kTulConfig);
  throw Error(ErrorCode::kNotFound, "no builtin config for '" + std::string(trainer) + "'");
}

TrainerConfig load_model_config(const ModelDescriptor& model) {
  const std::string& p = model.config_path;
  if (p.rfind("builtin:", 0) == 0) return TrainerConfig::parse(builtin_config_text(p.substr(8)), p);
  if (p.empty()) return TrainerConfig{};
  return TrainerConfig::load(p);
}

SplitPaths write_split_files(const DataSplit& split, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  SplitPaths paths{(base / "train.csv").string(), (base / "val.csv").string(), (base / "test.csv").string()};
  write_records(split.train, paths.train, true);
  write_records(split.val, paths.val, true);
  write_records(split.test, paths.test, true);
  return paths;
}

DataSplit load_split_files(const SplitPaths& paths) {
  const RecordSchema schema = sniff_schema(paths.train);
  const std::string files[3] = {paths.train, paths.val, paths.test};

  // One combined parse gives every part the same vocabulary and grid; the
  // per-file parses only tell which (entity, session) belongs where.
  std::string combined;
  std::set<std::pair<std::string, int>> membership[3];
  for (int part = 0; part < 3; ++part) {
    const std::string text = read_file(files[part]);
    std::istringstream single(text);
    const LoadResult r = parse_records(single, schema, files[part]);
    for (const auto& t : r.dataset.trajectories) membership[part].emplace(t.entity_id, t.session);
    if (part == 0) {
      combined = text;
    } else {
      const auto nl = text.find('\n');
      if (nl != std::string::npos) combined += text.substr(nl + 1);
    }
    if (!combined.empty() && combined.back() != '\n') combined += '\n';
  }
  std::istringstream all(combined);
  const Dataset merged = parse_records(all, schema, std::filesystem::path(paths.train).parent_path().filename().string())
                             .dataset;

  std::vector<Trajectory> parts[3];
  for (const auto& t : merged.trajectories) {
    for (int part = 0; part < 3; ++part) {
      if (membership[part].count({t.entity_id, t.session})) {
        parts[part].push_back(t);
        break;
      }
    }
  }
  DataSplit split;
  split.train = with_trajectories(merged, std::move(parts[0]));
  split.val = with_trajectories(merged, std::move(parts[1]));
  split.test = with_trajectories(merged, std::move(parts[2]));
  return split;
}

}  // namespace trajagent
