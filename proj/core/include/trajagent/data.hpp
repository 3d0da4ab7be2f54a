#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trajagent {

enum class TrajectoryKind { kCheckin, kGps };

std::string_view to_string(TrajectoryKind kind);
TrajectoryKind parse_kind(std::string_view text);

enum class RecordSchema { kCheckinCsv, kGpsCsv };

std::string_view to_string(RecordSchema schema);
RecordSchema parse_schema(std::string_view text);

// Reserved location id introduced by the masking operator.
inline constexpr std::string_view kMaskToken = "[MASK]";

struct Point {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t timestamp = 0;
  std::string loc_id;    // empty when absent
  std::string category;  // empty when absent

  friend bool operator==(const Point&, const Point&) = default;
};

bool in_bounds(const Point& p);

struct Trajectory {
  std::string entity_id;
  int session = 0;
  TrajectoryKind kind = TrajectoryKind::kCheckin;
  std::vector<Point> points;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Location {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::string category;

  friend bool operator==(const Location&, const Location&) = default;
};

// Bijection loc_id <-> dense index. Indices are stable: entries are only
// ever appended.
class Vocabulary {
 public:
  std::size_t size() const { return locations_.size(); }
  bool empty() const { return locations_.empty(); }
  bool contains(std::string_view id) const { return index_.count(std::string(id)) != 0; }
  std::optional<std::size_t> find(std::string_view id) const;
  // Throws Error(kNotFound).
  std::size_t index_of(std::string_view id) const;
  const Location& at(std::size_t index) const { return locations_.at(index); }
  const std::vector<Location>& locations() const { return locations_; }

  // Returns the index of `loc.id`, appending it when new.
  std::size_t add(const Location& loc);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.locations_ == b.locations_;
  }

 private:
  std::vector<Location> locations_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct DatasetDescriptor {
  std::string name;
  TrajectoryKind kind = TrajectoryKind::kCheckin;
  std::string stats_summary;
  std::string region;
  std::string source;
  std::string path;  // CSV file or "synthetic:<kind>[:seed]"

  friend bool operator==(const DatasetDescriptor&, const DatasetDescriptor&) = default;
};

struct Dataset {
  std::string name;
  TrajectoryKind kind = TrajectoryKind::kCheckin;
  std::vector<Trajectory> trajectories;
  Vocabulary vocabulary;
  DatasetDescriptor descriptor;

  std::size_t num_points() const;

  // Field-for-field equality over the data itself; descriptor text excluded.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.name == b.name && a.kind == b.kind && a.trajectories == b.trajectories &&
           a.vocabulary == b.vocabulary;
  }
};

struct DatasetStats {
  std::size_t num_entities = 0;
  std::size_t num_locations = 0;
  std::size_t num_trajectories = 0;
  double avg_length = 0.0;
  std::int64_t time_min = 0;
  std::int64_t time_max = 0;
  std::optional<double> sampling_interval;  // GPS only, seconds

  std::string summary() const;
};

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct DataSplit {
  Dataset train;
  Dataset val;
  Dataset test;
  SplitRatios ratios;
};

struct RowIssue {
  std::size_t line_no = 0;
  std::string reason;
};

struct LoadOptions {
  double grid_cell_m = 250.0;
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;
  std::vector<RowIssue> issues;
};

// Reads a check-in or GPS CSV. Malformed rows are dropped and reported; an
// optional trailing `traj_id` column keeps pre-segmented trajectories apart.
LoadResult load_records(const std::string& path, RecordSchema schema, const LoadOptions& opts = {});
LoadResult parse_records(std::istream& in, RecordSchema schema, const std::string& name,
                         const LoadOptions& opts = {});

// Writes the schema matching ds.kind; with `with_traj_id` a trailing column
// carries the session ordinal so segmentation survives the round trip.
void write_records(const Dataset& ds, const std::string& path, bool with_traj_id = false);
void write_records(const Dataset& ds, std::ostream& out, bool with_traj_id = false);

Dataset clean(const Dataset& ds);

inline constexpr std::int64_t kCheckinSessionGap = 72 * 3600;
inline constexpr std::int64_t kGpsSessionGap = 10 * 60;
inline constexpr std::size_t kDefaultMinSessionLength = 3;

std::int64_t default_session_gap(TrajectoryKind kind);

Dataset sessionize(const Dataset& ds, std::int64_t gap_seconds,
                   std::size_t min_len = kDefaultMinSessionLength);

DataSplit split_chronological(const Dataset& ds, const SplitRatios& ratios = {},
                              bool strict = false);

DatasetStats stats(const Dataset& ds);

// Throws Error(kValidationError) naming the first violated invariant.
void validate(const Dataset& ds);

// Rebuilds the vocabulary from the locations referenced by trajectories,
// keeping metadata (and relative order) from `previous`.
Vocabulary restrict_vocabulary(const std::vector<Trajectory>& trajs, const Vocabulary& previous);

// Copy of `ds` with the given trajectories and the same vocabulary.
Dataset with_trajectories(const Dataset& ds, std::vector<Trajectory> trajs);

// Great-circle distance in meters.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

}  // namespace trajagent
