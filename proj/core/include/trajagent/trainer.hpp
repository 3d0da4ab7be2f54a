#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "trajagent/config.hpp"
#include "trajagent/data.hpp"
#include "trajagent/metrics.hpp"
#include "trajagent/registry.hpp"

namespace trajagent {

inline constexpr int kWireVersion = 1;

struct TrainRequest {
  std::string task;
  std::string train_path;
  std::string val_path;
  std::string test_path;
  // In-process data for native trainers; when null the paths are read.
  std::shared_ptr<const DataSplit> split;
  TrainerConfig config;
  std::uint64_t seed = 0;
  std::string metric = "Acc@5";
  MetricDirection direction = MetricDirection::kHigherBetter;
  double budget_s = 60.0;
  // Test metrics are only computed for final summaries.
  bool include_test = false;
};

struct TrainReport {
  enum class Status { kOk, kError };
  Status status = Status::kError;
  // Primary metric on val, negated for lower-is-better metrics.
  double score = 0.0;
  // Raw values keyed "val/<metric>" and "test/<metric>".
  std::map<std::string, double> metrics;
  double wall_time_s = 0.0;
  std::string error;

  bool ok() const { return status == Status::kOk; }
};

// Never throws: failures, timeouts and malformed replies become error reports.
TrainReport handle_train_request(const TrainRequest& req, const TrainerBinding& binding);

// Wire protocol, one JSON object per line.
nlohmann::json request_to_wire(const TrainRequest& req);
// The wire carries values only; `base` supplies their types and comments.
TrainRequest request_from_wire(const nlohmann::json& j, const TrainerConfig& base);
// `raw_score` is the un-negated primary metric.
nlohmann::json report_to_wire(const TrainReport& report, double raw_score);
// Throws Error(kValidationFailure) on a malformed reply.
TrainReport report_from_wire(const nlohmann::json& j, MetricDirection direction);

// Native worker loop: reads one request line, writes one reply line.
// Returns the process exit code (0 unless the protocol itself failed).
int serve_trainer(std::istream& in, std::ostream& out, std::string_view target);

// Builtin commented configs for the native trainers ("markov", "tul").
// Throws Error(kNotFound).
std::string builtin_config_text(std::string_view trainer);
// Resolves "builtin:<name>" or a file path. Throws Error(kConfigSyntax / kIo).
TrainerConfig load_model_config(const ModelDescriptor& model);

// Split files exchanged with trainers: CSV in the kind's schema with a
// traj_id column. Loading parses the three files against one shared
// vocabulary (and one GPS grid).
struct SplitPaths {
  std::string train, val, test;
};
SplitPaths write_split_files(const DataSplit& split, const std::string& dir);
DataSplit load_split_files(const SplitPaths& paths);

}  // namespace trajagent
