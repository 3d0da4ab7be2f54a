#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajagent {

// Stage that produced a record; kBase marks the round-0 baseline.
enum class Stage { kBase, kDA, kPO, kPRO };

std::string_view to_string(Stage stage);
// Throws Error(kValidationError).
Stage parse_stage(std::string_view text);

enum class RecordStatus { kOk, kFailed };

struct ExperimentRecord {
  int round = 0;
  int cycle = 0;
  Stage stage = Stage::kBase;
  nlohmann::json action = nlohmann::json::object();
  std::string action_text;
  double score = 0.0;  // maximize-normalized; meaningless when failed
  std::map<std::string, double> metrics;
  RecordStatus status = RecordStatus::kFailed;
  std::string feedback;
  double wall_time_s = 0.0;
  std::string started_at;
  std::string finished_at;
  // Per-item outcomes of LLM-as-model evaluations.
  nlohmann::json items = nlohmann::json::array();

  bool ok() const { return status == RecordStatus::kOk; }
};

// Failed scores serialize as null.
nlohmann::json to_json(const ExperimentRecord& r);
ExperimentRecord record_from_json(const nlohmann::json& j);

// One line for the MEMORY prompt slot.
std::string memory_entry(const ExperimentRecord& r);

std::string utc_timestamp();

inline constexpr std::size_t kDefaultMemoryWindow = 10;

// Long-term memory is the append-only record log (mirrored to a JSON-lines
// file when a path is set); short-term memory is the newest `window`
// records plus the current guidance text.
class MemoryStore {
 public:
  explicit MemoryStore(std::size_t window = kDefaultMemoryWindow, std::string log_path = {});
  // Loads an existing log so a run can resume. Throws Error(kIo) on a
  // corrupt line.
  static MemoryStore open(const std::string& log_path, std::size_t window = kDefaultMemoryWindow);

  // Writes the record as one line before returning.
  void append(ExperimentRecord record);

  const std::vector<ExperimentRecord>& long_term() const { return records_; }
  std::vector<ExperimentRecord> short_term(std::optional<Stage> stage = std::nullopt) const;
  std::optional<ExperimentRecord> find_round(int round) const;

  std::size_t window() const { return window_; }
  const std::string& guidance() const { return guidance_; }
  void set_guidance(std::string text) { guidance_ = std::move(text); }

 private:
  std::size_t window_;
  std::string log_path_;
  std::vector<ExperimentRecord> records_;
  std::string guidance_;
};

}  // namespace trajagent
