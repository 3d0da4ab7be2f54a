#include "trajagent/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "trajagent/csv.hpp"
#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

namespace {

constexpr double kMetersPerDegree = 111320.0;
constexpr double kPi = 3.14159265358979323846;

struct RawRow {
  std::string entity;
  std::string traj;
  Point point;
};

}  // namespace

std::string_view to_string(TrajectoryKind kind) {
  return kind == TrajectoryKind::kCheckin ? "checkin" : "gps";
}

TrajectoryKind parse_kind(std::string_view text) {
  if (iequals(text, "checkin")) return TrajectoryKind::kCheckin;
  if (iequals(text, "gps")) return TrajectoryKind::kGps;
  throw Error(ErrorCode::kValidationError, "unknown trajectory kind '" + std::string(text) + "'");
}

std::string_view to_string(RecordSchema schema) {
  return schema == RecordSchema::kCheckinCsv ? "checkin_csv" : "gps_csv";
}

RecordSchema parse_schema(std::string_view text) {
  if (text == "checkin_csv") return RecordSchema::kCheckinCsv;
  if (text == "gps_csv") return RecordSchema::kGpsCsv;
  throw Error(ErrorCode::kValidationError, "unknown schema '" + std::string(text) + "'");
}

bool in_bounds(const Point& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0 && p.timestamp >= 0;
}

std::optional<std::size_t> Vocabulary::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_of(std::string_view id) const {
  if (auto idx = find(id)) return *idx;
  throw Error(ErrorCode::kNotFound, "location '" + std::string(id) + "' not in vocabulary");
}

std::size_t Vocabulary::add(const Location& loc) {
  auto [it, inserted] = index_.emplace(loc.id, locations_.size());
  if (inserted) locations_.push_back(loc);
  return it->second;
}

std::size_t Dataset::num_points() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.points.size();
  return n;
}

std::string DatasetStats::summary() const {
  std::ostringstream ss;
  ss << num_entities << " entities, " << num_locations << " locations, " << num_trajectories
     << " trajectories, avg length " << format_fixed(avg_length, 2) << ", time span ["
     << time_min << ", " << time_max << "]";
  if (sampling_interval) ss << ", sampling interval " << format_double(*sampling_interval) << "s";
  return ss.str();
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadius = 6371008.8;
  const double rad = kPi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace {

void assign_grid_cells(std::vector<RawRow>& rows, double cell_m) {
  double min_lat = 90, max_lat = -90, min_lon = 180;
  for (const auto& r : rows) {
    min_lat = std::min(min_lat, r.point.lat);
    max_lat = std::max(max_lat, r.point.lat);
    min_lon = std::min(min_lon, r.point.lon);
  }
  const double mid_lat = (min_lat + max_lat) / 2;
  const double lat_step = cell_m / kMetersPerDegree;
  const double lon_step =
      cell_m / (kMetersPerDegree * std::max(1e-6, std::cos(mid_lat * kPi / 180.0)));
  for (auto& r : rows) {
    const auto row = static_cast<long long>(std::floor((r.point.lat - min_lat) / lat_step));
    const auto col = static_cast<long long>(std::floor((r.point.lon - min_lon) / lon_step));
    r.point.loc_id = "g" + std::to_string(row) + "_" + std::to_string(col);
  }
}

Vocabulary build_vocabulary(const std::vector<Trajectory>& trajs) {
  Vocabulary vocab;
  for (const auto& t : trajs) {
    for (const auto& p : t.points) {
      if (!p.loc_id.empty()) vocab.add(Location{p.loc_id, p.lat, p.lon, p.category});
    }
  }
  return vocab;
}

void sort_points(std::vector<Point>& pts) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const Point& a, const Point& b) { return a.timestamp < b.timestamp; });
}

}  // namespace

LoadResult parse_records(std::istream& in, RecordSchema schema, const std::string& name,
                         const LoadOptions& opts) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(ErrorCode::kEmptyDataset, name + ": empty file");
  for (auto& h : header) h = std::string(trim(h));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto column = [&](std::string_view col) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == col) return i;
    }
    return std::nullopt;
  };
  auto required = [&](std::string_view col) {
    if (auto idx = column(col)) return *idx;
    throw Error(ErrorCode::kMissingColumn, std::string(col));
  };

  const bool checkin = schema == RecordSchema::kCheckinCsv;
  const std::size_t c_entity = required("entity_id");
  const std::size_t c_ts = required("timestamp");
  const std::size_t c_lat = required("lat");
  const std::size_t c_lon = required("lon");
  std::optional<std::size_t> c_loc;
  std::optional<std::size_t> c_cat;
  if (checkin) {
    c_loc = required("loc_id");
    c_cat = column("category");
  }
  const auto c_traj = column("traj_id");

  LoadResult result;
  std::vector<RawRow> rows;
  std::vector<std::string> fields;
  for (;;) {
    bool more = false;
    try {
      more = reader.next(fields);
    } catch (const Error& e) {
      result.issues.push_back({reader.line_no(), e.detail()});
      ++result.dropped_rows;
      break;
    }
    if (!more) break;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    auto drop = [&](std::string reason) {
      result.issues.push_back({reader.line_no(), std::move(reason)});
      ++result.dropped_rows;
    };
    if (fields.size() < header.size()) {
      drop("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    RawRow row;
    row.entity = std::string(trim(fields[c_entity]));
    auto ts = parse_int(fields[c_ts]);
    auto lat = parse_double(fields[c_lat]);
    auto lon = parse_double(fields[c_lon]);
    if (row.entity.empty()) {
      drop("empty entity_id");
      continue;
    }
    if (!ts || !lat || !lon) {
      drop("unparsable timestamp/lat/lon");
      continue;
    }
    row.point.timestamp = *ts;
    row.point.lat = *lat;
    row.point.lon = *lon;
    if (!in_bounds(row.point)) {
      drop("coordinate or timestamp out of bounds");
      continue;
    }
    if (checkin) {
      row.point.loc_id = std::string(trim(fields[*c_loc]));
      if (row.point.loc_id.empty()) {
        drop("empty loc_id");
        continue;
      }
      if (c_cat) row.point.category = fields[*c_cat];
    }
    if (c_traj) row.traj = std::string(trim(fields[*c_traj]));
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, name + ": no valid rows");
  if (!checkin) assign_grid_cells(rows, opts.grid_cell_m);

  // Group by entity (first-appearance order), then by traj_id when present.
  std::vector<std::string> entity_order;
  std::map<std::string, std::vector<std::string>> traj_order;
  std::map<std::pair<std::string, std::string>, std::vector<Point>> groups;
  for (auto& r : rows) {
    auto key = std::make_pair(r.entity, r.traj);
    auto it = groups.find(key);
    if (it == groups.end()) {
      if (!traj_order.count(r.entity)) entity_order.push_back(r.entity);
      traj_order[r.entity].push_back(r.traj);
      it = groups.emplace(key, std::vector<Point>{}).first;
    }
    it->second.push_back(std::move(r.point));
  }

  Dataset& ds = result.dataset;
  ds.name = name;
  ds.kind = checkin ? TrajectoryKind::kCheckin : TrajectoryKind::kGps;
  for (const auto& entity : entity_order) {
    int ordinal = 0;
    for (const auto& traj : traj_order[entity]) {
      Trajectory t;
      t.entity_id = entity;
      t.kind = ds.kind;
      if (auto parsed = parse_int(traj); parsed && !traj.empty()) {
        t.session = static_cast<int>(*parsed);
      } else {
        t.session = ordinal;
      }
      ++ordinal;
      t.points = std::move(groups[{entity, traj}]);
      sort_points(t.points);
      ds.trajectories.push_back(std::move(t));
    }
  }
  ds.vocabulary = build_vocabulary(ds.trajectories);
  ds.descriptor.name = name;
  ds.descriptor.kind = ds.kind;
  ds.descriptor.stats_summary = stats(ds).summary();
  return result;
}

LoadResult load_records(const std::string& path, RecordSchema schema, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  auto result = parse_records(in, schema, std::filesystem::path(path).stem().string(), opts);
  result.dataset.descriptor.path = path;
  return result;
}

void write_records(const Dataset& ds, std::ostream& out, bool with_traj_id) {
  const bool checkin = ds.kind == TrajectoryKind::kCheckin;
  std::vector<std::string> header = {"entity_id", "timestamp", "lat", "lon"};
  if (checkin) {
    header.emplace_back("loc_id");
    header.emplace_back("category");
  }
  if (with_traj_id) header.emplace_back("traj_id");
  csv::write_row(out, header);
  std::vector<std::string> row;
  for (const auto& t : ds.trajectories) {
    for (const auto& p : t.points) {
      row = {t.entity_id, std::to_string(p.timestamp), format_double(p.lat), format_double(p.lon)};
      if (checkin) {
        row.push_back(p.loc_id);
        row.push_back(p.category);
      }
      if (with_traj_id) row.push_back(std::to_string(t.session));
      csv::write_row(out, row);
    }
  }
}

void write_records(const Dataset& ds, const std::string& path, bool with_traj_id) {
  std::ostringstream ss;
  write_records(ds, ss, with_traj_id);
  write_file_atomic(path, ss.str());
}

Vocabulary restrict_vocabulary(const std::vector<Trajectory>& trajs, const Vocabulary& previous) {
  std::vector<char> used(previous.size(), 0);
  Vocabulary extra;
  for (const auto& t : trajs) {
    for (const auto& p : t.points) {
      if (p.loc_id.empty()) continue;
      if (auto idx = previous.find(p.loc_id)) {
        used[*idx] = 1;
      } else {
        extra.add(Location{p.loc_id, p.lat, p.lon, p.category});
      }
    }
  }
  Vocabulary out;
  for (std::size_t i = 0; i < previous.size(); ++i) {
    if (used[i]) out.add(previous.at(i));
  }
  for (const auto& loc : extra.locations()) out.add(loc);
  return out;
}

Dataset with_trajectories(const Dataset& ds, std::vector<Trajectory> trajs) {
  Dataset out;
  out.name = ds.name;
  out.kind = ds.kind;
  out.vocabulary = ds.vocabulary;
  out.descriptor = ds.descriptor;
  out.trajectories = std::move(trajs);
  return out;
}

Dataset clean(const Dataset& ds) {
  std::vector<Trajectory> trajs;
  trajs.reserve(ds.trajectories.size());
  // Duplicates are judged per entity across all its trajectories.
  std::map<std::string, std::set<std::tuple<std::int64_t, double, double, std::string, std::string>>>
      seen;
  for (const auto& src : ds.trajectories) {
    Trajectory t = src;
    sort_points(t.points);
    auto& entity_seen = seen[t.entity_id];
    std::vector<Point> kept;
    kept.reserve(t.points.size());
    for (auto& p : t.points) {
      if (!in_bounds(p)) continue;
      if (!entity_seen.emplace(p.timestamp, p.lat, p.lon, p.loc_id, p.category).second) continue;
      kept.push_back(std::move(p));
    }
    t.points = std::move(kept);
    if (!t.points.empty()) trajs.push_back(std::move(t));
  }
  if (trajs.empty()) throw Error(ErrorCode::kEmptyDataset, ds.name + ": cleaning removed every point");
  Dataset out = with_trajectories(ds, std::move(trajs));
  out.vocabulary = restrict_vocabulary(out.trajectories, ds.vocabulary);
  return out;
}

std::int64_t default_session_gap(TrajectoryKind kind) {
  return kind == TrajectoryKind::kCheckin ? kCheckinSessionGap : kGpsSessionGap;
}

Dataset sessionize(const Dataset& ds, std::int64_t gap_seconds, std::size_t min_len) {
  if (gap_seconds <= 0) throw Error(ErrorCode::kValidationError, "gap_seconds must be > 0");
  if (min_len < 1) throw Error(ErrorCode::kValidationError, "min_len must be >= 1");

  std::vector<std::string> order;
  std::map<std::string, std::vector<Point>> streams;
  for (const auto& t : ds.trajectories) {
    auto [it, inserted] = streams.try_emplace(t.entity_id);
    if (inserted) order.push_back(t.entity_id);
    it->second.insert(it->second.end(), t.points.begin(), t.points.end());
  }

  std::vector<Trajectory> out;
  for (const auto& entity : order) {
    auto& pts = streams[entity];
    sort_points(pts);
    int ordinal = 0;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
      if (end - start >= min_len) {
        Trajectory t;
        t.entity_id = entity;
        t.kind = ds.kind;
        t.session = ordinal++;
        t.points.assign(pts.begin() + static_cast<std::ptrdiff_t>(start),
                        pts.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(t));
      }
      start = end;
    };
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].timestamp - pts[i - 1].timestamp > gap_seconds) flush(i);
    }
    flush(pts.size());
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyDataset, ds.name + ": every session was shorter than min_len");
  return with_trajectories(ds, std::move(out));
}

DataSplit split_chronological(const Dataset& ds, const SplitRatios& ratios, bool strict) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::kValidationError, "split ratios must be positive and sum to 1");
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    auto [it, inserted] = by_entity.try_emplace(ds.trajectories[i].entity_id);
    if (inserted) order.push_back(ds.trajectories[i].entity_id);
    it->second.push_back(i);
  }

  std::vector<Trajectory> train, val, test;
  for (const auto& entity : order) {
    auto idx = by_entity[entity];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return ds.trajectories[a].points.front().timestamp <
             ds.trajectories[b].points.front().timestamp;
    });
    const std::size_t n = idx.size();
    if (n < 3) {
      if (strict) {
        throw Error(ErrorCode::kDegenerateSplit,
                    "entity '" + entity + "' has " + std::to_string(n) + " sessions (< 3)");
      }
      for (auto i : idx) train.push_back(ds.trajectories[i]);
      continue;
    }
    auto n_train = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n) + 1e-9));
    auto n_train_val = static_cast<std::size_t>(
        std::floor((ratios.train + ratios.val) * static_cast<double>(n) + 1e-9));
    // Every part gets at least one session.
    n_train = std::clamp<std::size_t>(n_train, 1, n - 2);
    n_train_val = std::clamp<std::size_t>(n_train_val, n_train + 1, n - 1);
    for (std::size_t k = 0; k < n; ++k) {
      const auto& t = ds.trajectories[idx[k]];
      if (k < n_train) {
        train.push_back(t);
      } else if (k < n_train_val) {
        val.push_back(t);
      } else {
        test.push_back(t);
      }
    }
  }
  DataSplit split;
  split.ratios = ratios;
  split.train = with_trajectories(ds, std::move(train));
  split.val = with_trajectories(ds, std::move(val));
  split.test = with_trajectories(ds, std::move(test));
  return split;
}

DatasetStats stats(const Dataset& ds) {
  if (ds.trajectories.empty()) throw Error(ErrorCode::kEmptyDataset, ds.name + ": no trajectories");
  DatasetStats s;
  std::set<std::string> entities;
  std::set<std::string> locations;
  std::vector<std::int64_t> gaps;
  std::size_t points = 0;
  s.time_min = std::numeric_limits<std::int64_t>::max();
  s.time_max = std::numeric_limits<std::int64_t>::min();
  for (const auto& t : ds.trajectories) {
    entities.insert(t.entity_id);
    points += t.points.size();
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const auto& p = t.points[i];
      if (!p.loc_id.empty()) locations.insert(p.loc_id);
      s.time_min = std::min(s.time_min, p.timestamp);
      s.time_max = std::max(s.time_max, p.timestamp);
      if (i) gaps.push_back(p.timestamp - t.points[i - 1].timestamp);
    }
  }
  if (points == 0) throw Error(ErrorCode::kEmptyDataset, ds.name + ": no points");
  s.num_entities = entities.size();
  s.num_locations = locations.size();
  s.num_trajectories = ds.trajectories.size();
  s.avg_length = static_cast<double>(points) / static_cast<double>(ds.trajectories.size());
  if (ds.kind == TrajectoryKind::kGps && !gaps.empty()) {
    std::sort(gaps.begin(), gaps.end());
    const std::size_t m = gaps.size() / 2;
    s.sampling_interval = gaps.size() % 2 ? static_cast<double>(gaps[m])
                                          : (static_cast<double>(gaps[m - 1]) + static_cast<double>(gaps[m])) / 2.0;
  }
  return s;
}

void validate(const Dataset& ds) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kValidationError, ds.name + ": " + what);
  };
  std::set<std::pair<std::string, int>> keys;
  for (const auto& t : ds.trajectories) {
    if (t.points.empty()) fail("trajectory of '" + t.entity_id + "' is empty");
    if (t.kind != ds.kind) fail("trajectory kind differs from dataset kind");
    if (!keys.emplace(t.entity_id, t.session).second) {
      fail("duplicate (entity, session) (" + t.entity_id + ", " + std::to_string(t.session) + ")");
    }
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const auto& p = t.points[i];
      if (!in_bounds(p)) fail("point out of bounds in '" + t.entity_id + "'");
      if (i && p.timestamp < t.points[i - 1].timestamp) fail("timestamps decrease in '" + t.entity_id + "'");
      if (ds.kind == TrajectoryKind::kCheckin && p.loc_id.empty()) fail("check-in point without loc_id");
      if (!p.loc_id.empty() && !ds.vocabulary.contains(p.loc_id)) {
        fail("loc_id '" + p.loc_id + "' missing from vocabulary");
      }
    }
  }
}

}  // namespace trajagent
