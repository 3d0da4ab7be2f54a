#include "trajagent/store.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "trajagent/error.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"
#include "trajagent/workflow.hpp"

namespace trajagent {

using nlohmann::json;
namespace fs = std::filesystem;

ExperimentStore::ExperimentStore(std::string root) : root_(std::move(root)) {}

std::string ExperimentStore::experiment_id(const json& inputs) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(inputs.dump())));
  return buf;
}

std::string ExperimentStore::dir(const std::string& id) const { return (fs::path(root_) / id).string(); }

std::string ExperimentStore::create(const std::string& id) const {
  const std::string d = dir(id);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + d + "': " + ec.message());
  return d;
}

std::string ExperimentStore::records_path(const std::string& id) const {
  return (fs::path(dir(id)) / "records.jsonl").string();
}

std::string ExperimentStore::llm_log_path(const std::string& id) const {
  return (fs::path(dir(id)) / "llm_log.jsonl").string();
}

void ExperimentStore::write_query(const std::string& id, const std::string& query) const {
  write_file_atomic((fs::path(dir(id)) / "query.txt").string(), query + "\n");
}

void ExperimentStore::write_plan(const std::string& id, const ExecutionPlan& plan) const {
  write_file_atomic((fs::path(dir(id)) / "plan.json").string(), plan.to_json().dump(2) + "\n");
}

void ExperimentStore::write_result(const std::string& id, const OptimizationResult& result) const {
  write_file_atomic((fs::path(dir(id)) / "best.json").string(), result.to_json().dump(2) + "\n");
}

void ExperimentStore::write_report(const std::string& id, const SummaryReport& report) const {
  write_file_atomic((fs::path(dir(id)) / "report.json").string(), report.to_json().dump(2) + "\n");
  write_file_atomic((fs::path(dir(id)) / "report.md").string(), report.to_markdown());
}

std::vector<std::string> ExperimentStore::list() const {
  std::vector<std::string> ids;
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) return ids;
  for (const auto& e : fs::directory_iterator(root_, ec)) {
    if (e.is_directory() && fs::exists(e.path() / "report.json")) ids.push_back(e.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string ExperimentStore::read_report_markdown(const std::string& id) const {
  const fs::path p = fs::path(dir(id)) / "report.md";
  if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "no report for experiment '" + id + "'");
  return read_file(p.string());
}

json ExperimentStore::read_report_json(const std::string& id) const {
  const fs::path p = fs::path(dir(id)) / "report.json";
  if (!fs::exists(p)) throw Error(ErrorCode::kNotFound, "no report for experiment '" + id + "'");
  return json::parse(read_file(p.string()));
}

}  // namespace trajagent
