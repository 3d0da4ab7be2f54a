#include "trajagent/synth.hpp"

#include <cmath>
#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

namespace {

constexpr std::int64_t kEpoch = 1'600'000'000;
constexpr double kCenterLat = 40.7128;
constexpr double kCenterLon = -74.0060;

const char* const kCategories[] = {"Home", "Office", "Cafe", "Gym", "Park", "Restaurant", "Shop", "Station"};

Dataset finish(std::istream& csv_text, RecordSchema schema, const std::string& name) {
  auto loaded = parse_records(csv_text, schema, name);
  Dataset ds = std::move(loaded.dataset);
  ds.descriptor.source = "seeded generator";
  ds.descriptor.region = "synthetic";
  return ds;
}

}  // namespace

Dataset synthetic_checkin(const SyntheticCheckinOptions& opts) {
  Rng rng(opts.seed);
  struct Poi {
    double lat, lon;
    std::string category;
  };
  std::vector<Poi> pool;
  for (std::size_t i = 0; i < opts.locations; ++i) {
    pool.push_back({kCenterLat + rng.uniform(-0.05, 0.05), kCenterLon + rng.uniform(-0.06, 0.06),
                    kCategories[rng.index(std::size(kCategories))]});
  }

  std::ostringstream out;
  out << "entity_id,timestamp,lat,lon,loc_id,category\n";
  for (std::size_t e = 0; e < opts.entities; ++e) {
    const std::size_t period = static_cast<std::size_t>(
        rng.range(static_cast<std::int64_t>(opts.min_period), static_cast<std::int64_t>(opts.max_period)));
    std::vector<std::size_t> locs(opts.locations);
    for (std::size_t i = 0; i < locs.size(); ++i) locs[i] = i;
    rng.shuffle(locs);
    locs.resize(std::min(period, locs.size()));

    std::int64_t day_start = kEpoch + static_cast<std::int64_t>(rng.index(86400));
    for (std::size_t s = 0; s < opts.sessions_per_entity; ++s) {
      std::int64_t t = day_start + static_cast<std::int64_t>(rng.index(3600));
      std::size_t phase = rng.index(locs.size());
      const std::size_t steps = opts.cycles_per_session * locs.size();
      for (std::size_t k = 0; k < steps; ++k) {
        t += 3600 + static_cast<std::int64_t>(rng.index(2 * 3600));
        const std::size_t planned = locs[(phase + k) % locs.size()];
        if (rng.bernoulli(opts.dropout)) continue;
        const std::size_t visited = rng.bernoulli(opts.noise) ? rng.index(pool.size()) : planned;
        const auto& poi = pool[visited];
        out << "u" << e << ',' << t << ',' << format_double(poi.lat) << ',' << format_double(poi.lon) << ",L"
            << visited << ',' << poi.category << '\n';
      }
      // 3.5 to 5 days between sessions keeps them apart under a 72 h gap.
      day_start += 84 * 3600 + static_cast<std::int64_t>(rng.index(36 * 3600));
    }
  }
  std::istringstream in(out.str());
  return finish(in, RecordSchema::kCheckinCsv, "Synthetic_Checkin");
}

Dataset synthetic_gps(const SyntheticGpsOptions& opts) {
  Rng rng(opts.seed);
  std::ostringstream out;
  out << "entity_id,timestamp,lat,lon\n";
  for (std::size_t e = 0; e < opts.entities; ++e) {
    // Each vehicle shuttles along its own corridor.
    const double base_lat = kCenterLat + rng.uniform(-0.03, 0.03);
    const double base_lon = kCenterLon + rng.uniform(-0.03, 0.03);
    const double heading = rng.uniform(0, 2 * 3.14159265358979323846);
    std::int64_t t = kEpoch + static_cast<std::int64_t>(rng.index(86400));
    for (std::size_t trip = 0; trip < opts.trips_per_entity; ++trip) {
      double lat = base_lat, lon = base_lon;
      const double speed = rng.uniform(6.0, 14.0);  // m/s
      const double dir = trip % 2 ? heading + 3.14159265358979323846 : heading;
      for (std::size_t k = 0; k < opts.points_per_trip; ++k) {
        out << "v" << e << ',' << t << ',' << format_double(lat) << ',' << format_double(lon) << '\n';
        const double step = speed * static_cast<double>(opts.sampling_s);
        lat += step * std::cos(dir) / 111320.0 + rng.uniform(-2e-5, 2e-5);
        lon += step * std::sin(dir) / (111320.0 * std::cos(base_lat * 3.14159265358979323846 / 180)) +
               rng.uniform(-2e-5, 2e-5);
        t += opts.sampling_s;
      }
      t += 2 * 3600 + static_cast<std::int64_t>(rng.index(3600));
    }
  }
  std::istringstream in(out.str());
  return finish(in, RecordSchema::kGpsCsv, "Synthetic_GPS");
}

Dataset materialize(const DatasetDescriptor& desc) {
  const std::string& path = desc.path;
  Dataset ds;
  if (path.rfind("synthetic:", 0) == 0) {
    const auto parts = split(path, ':');
    const std::string kind = parts.size() > 1 ? parts[1] : "";
    std::optional<std::int64_t> seed;
    if (parts.size() > 2) seed = parse_int(parts[2]);
    if (kind == "checkin") {
      SyntheticCheckinOptions o;
      if (seed) o.seed = static_cast<std::uint64_t>(*seed);
      ds = synthetic_checkin(o);
    } else if (kind == "gps") {
      SyntheticGpsOptions o;
      if (seed) o.seed = static_cast<std::uint64_t>(*seed);
      ds = synthetic_gps(o);
    } else {
      throw Error(ErrorCode::kNotFound, "unknown synthetic dataset '" + path + "'");
    }
  } else if (!path.empty()) {
    const auto schema = desc.kind == TrajectoryKind::kCheckin ? RecordSchema::kCheckinCsv : RecordSchema::kGpsCsv;
    ds = load_records(path, schema).dataset;
  } else {
    throw Error(ErrorCode::kNotFound, "dataset '" + desc.name + "' has no data path");
  }
  ds.name = desc.name;
  const std::string summary = ds.descriptor.stats_summary;
  ds.descriptor = desc;
  if (ds.descriptor.stats_summary.empty()) ds.descriptor.stats_summary = summary;
  return ds;
}

DataSplit prepare_split(const Dataset& raw, const SplitRatios& ratios) {
  const Dataset cleaned = clean(raw);
  const Dataset sessions = sessionize(cleaned, default_session_gap(cleaned.kind), kDefaultMinSessionLength);
  return split_chronological(sessions, ratios, false);
}

}  // namespace trajagent
