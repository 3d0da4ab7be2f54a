#include "trajagent/memory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kBase: return "BASE";
    case Stage::kDA: return "DA";
    case Stage::kPO: return "PO";
    case Stage::kPRO: return "PRO";
  }
  return "BASE";
}

Stage parse_stage(std::string_view text) {
  if (iequals(text, "BASE")) return Stage::kBase;
  if (iequals(text, "DA")) return Stage::kDA;
  if (iequals(text, "PO")) return Stage::kPO;
  if (iequals(text, "PRO")) return Stage::kPRO;
  throw Error(ErrorCode::kValidationError, "unknown stage '" + std::string(text) + "'");
}

json to_json(const ExperimentRecord& r) {
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = v;
  json j{{"round", r.round},
         {"cycle", r.cycle},
         {"stage", to_string(r.stage)},
         {"action", r.action},
         {"action_text", r.action_text},
         {"score", r.ok() && std::isfinite(r.score) ? json(r.score) : json(nullptr)},
         {"metrics", metrics},
         {"status", r.ok() ? "ok" : "failed"},
         {"feedback", r.feedback},
         {"wall_time_s", r.wall_time_s},
         {"started_at", r.started_at},
         {"finished_at", r.finished_at}};
  if (!r.items.empty()) j["items"] = r.items;
  return j;
}

ExperimentRecord record_from_json(const json& j) {
  ExperimentRecord r;
  r.round = j.at("round").get<int>();
  r.cycle = j.value("cycle", 0);
  r.stage = parse_stage(j.at("stage").get<std::string>());
  r.action = j.value("action", json::object());
  r.action_text = j.value("action_text", std::string());
  r.status = j.at("status").get<std::string>() == "ok" ? RecordStatus::kOk : RecordStatus::kFailed;
  r.score = j.at("score").is_number() ? j["score"].get<double>() : -INFINITY;
  if (r.ok() && !std::isfinite(r.score)) throw Error(ErrorCode::kValidationError, "ok record without a score");
  const json metrics = j.value("metrics", json::object());
  for (const auto& [k, v] : metrics.items()) r.metrics[k] = v.get<double>();
  r.feedback = j.value("feedback", std::string());
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.started_at = j.value("started_at", std::string());
  r.finished_at = j.value("finished_at", std::string());
  r.items = j.value("items", json::array());
  return r;
}

std::string memory_entry(const ExperimentRecord& r) {
  std::string action = r.action_text.empty() ? r.action.dump() : r.action_text;
  for (auto& c : action) {
    if (c == '\n') c = ' ';
  }
  std::string out = "round " + std::to_string(r.round) + " [" + std::string(to_string(r.stage)) + "] action: " + action;
  out += r.ok() ? " | score: " + format_double(r.score) : " | score: failed";
  if (!r.feedback.empty()) out += " | " + r.feedback;
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MemoryStore::MemoryStore(std::size_t window, std::string log_path) : window_(window), log_path_(std::move(log_path)) {
  if (window_ < 1) throw Error(ErrorCode::kValidationError, "memory window must be >= 1");
}

MemoryStore MemoryStore::open(const std::string& log_path, std::size_t window) {
  MemoryStore m(window, log_path);
  std::ifstream in(log_path);
  if (!in) return m;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      m.records_.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kIo, log_path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return m;
}

void MemoryStore::append(ExperimentRecord record) {
  if (!log_path_.empty()) {
    const auto parent = std::filesystem::path(log_path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(log_path_, std::ios::app | std::ios::binary);
    const std::string line = to_json(record).dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + log_path_);
  }
  records_.push_back(std::move(record));
}

std::vector<ExperimentRecord> MemoryStore::short_term(std::optional<Stage> stage) const {
  std::vector<ExperimentRecord> out;
  for (auto it = records_.rbegin(); it != records_.rend() && out.size() < window_; ++it) {
    if (!stage || it->stage == *stage) out.push_back(*it);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<ExperimentRecord> MemoryStore::find_round(int round) const {
  for (const auto& r : records_) {
    if (r.round == round) return r;
  }
  return std::nullopt;
}

}  // namespace trajagent
