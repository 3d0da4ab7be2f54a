#pragma once

#include <cstdint>
#include <string>

#include "trajagent/data.hpp"

namespace trajagent {

// Sparse check-in benchmark: every entity repeats its own routine (a cycle
// over a few locations drawn from a shared pool), each planned visit is
// dropped with probability `dropout`, and sessions are separated by days.
struct SyntheticCheckinOptions {
  std::size_t entities = 50;
  std::size_t locations = 200;
  std::size_t min_period = 4;
  std::size_t max_period = 8;
  std::size_t sessions_per_entity = 20;
  std::size_t cycles_per_session = 2;
  double dropout = 0.3;
  double noise = 0.05;  // probability a visit goes to a random pool location
  std::uint64_t seed = 7;
};

struct SyntheticGpsOptions {
  std::size_t entities = 20;
  std::size_t trips_per_entity = 10;
  std::size_t points_per_trip = 60;
  std::int64_t sampling_s = 15;
  std::uint64_t seed = 11;
};

Dataset synthetic_checkin(const SyntheticCheckinOptions& opts = {});
Dataset synthetic_gps(const SyntheticGpsOptions& opts = {});

// Resolves a descriptor path: "synthetic:checkin[:seed]", "synthetic:gps[:seed]"
// or a CSV file in the schema matching the descriptor kind.
Dataset materialize(const DatasetDescriptor& desc);

// load -> clean -> sessionize (kind default gap, min length 3) -> split.
DataSplit prepare_split(const Dataset& raw, const SplitRatios& ratios = {});

}  // namespace trajagent
