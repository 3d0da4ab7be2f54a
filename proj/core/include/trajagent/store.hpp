#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajagent {

struct SummaryReport;
struct ExecutionPlan;
struct OptimizationResult;

// experiments/<id>/ holding query.txt, plan.json, records.jsonl, best.json,
// report.md, report.json and llm_log.jsonl.
class ExperimentStore {
 public:
  explicit ExperimentStore(std::string root);

  // 16 hex digits of FNV-1a over the canonical JSON of the run inputs.
  static std::string experiment_id(const nlohmann::json& inputs);

  const std::string& root() const { return root_; }
  std::string dir(const std::string& id) const;
  // Creates the directory; throws Error(kIo).
  std::string create(const std::string& id) const;

  std::string records_path(const std::string& id) const;
  std::string llm_log_path(const std::string& id) const;

  void write_query(const std::string& id, const std::string& query) const;
  void write_plan(const std::string& id, const ExecutionPlan& plan) const;
  void write_result(const std::string& id, const OptimizationResult& result) const;
  void write_report(const std::string& id, const SummaryReport& report) const;

  // Experiment ids that hold a report, sorted.
  std::vector<std::string> list() const;
  // Throws Error(kNotFound).
  std::string read_report_markdown(const std::string& id) const;
  nlohmann::json read_report_json(const std::string& id) const;

 private:
  std::string root_;
};

}  // namespace trajagent
