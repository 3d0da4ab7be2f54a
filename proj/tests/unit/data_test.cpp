#include <gtest/gtest.h>

#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/synth.hpp"

namespace trajagent {
namespace {

LoadResult parse(const std::string& text, RecordSchema schema = RecordSchema::kCheckinCsv) {
  std::istringstream in(text);
  return parse_records(in, schema, "t");
}

TEST(Load, CheckinRowsAndDroppedRows) {
  const auto r = parse(
      "entity_id,timestamp,lat,lon,loc_id,category\n"
      "u1,100,40.0,-74.0,A,cafe\n"
      "u1,200,40.1,-74.1,B,bar\n"
      "u1,bad,40.1,-74.1,B,bar\n"
      "u2,300,95.0,-74.1,C,x\n"
      "u2,400,40.2,-74.2,,x\n"
      "u2,500,40.2,-74.2,C\n");
  EXPECT_EQ(r.dataset.trajectories.size(), 1u);
  EXPECT_EQ(r.dataset.trajectories[0].points.size(), 2u);
  EXPECT_EQ(r.dropped_rows, 4u);
  ASSERT_EQ(r.issues.size(), 4u);
  EXPECT_EQ(r.issues[0].line_no, 4u);
  EXPECT_EQ(r.dataset.vocabulary.size(), 2u);
}

TEST(Load, MissingColumnThrows) {
  try {
    parse("entity_id,timestamp,lat,lon\nu,1,0,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingColumn);
    EXPECT_EQ(e.detail(), "loc_id");
  }
}

TEST(Load, GpsPointsGetGridCells) {
  const auto r = parse("entity_id,timestamp,lat,lon\nv,0,40.0,-74.0\nv,15,40.0001,-74.0001\nv,30,40.01,-74.01\n",
                       RecordSchema::kGpsCsv);
  const auto& pts = r.dataset.trajectories.at(0).points;
  EXPECT_EQ(pts[0].loc_id, pts[1].loc_id);
  EXPECT_NE(pts[0].loc_id, pts[2].loc_id);
  validate(r.dataset);
}

TEST(Clean, SortsAndDeduplicates) {
  auto r = parse(
      "entity_id,timestamp,lat,lon,loc_id\n"
      "u,300,1,1,C\nu,100,1,1,A\nu,100,1,1,A\nu,200,1,1,B\n");
  const Dataset c = clean(r.dataset);
  ASSERT_EQ(c.trajectories.size(), 1u);
  const auto& p = c.trajectories[0].points;
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].timestamp, 100);
  EXPECT_EQ(p[2].loc_id, "C");
  validate(c);
}

TEST(Sessionize, SplitsOnGapsAndDropsShortSessions) {
  auto r = parse(
      "entity_id,timestamp,lat,lon,loc_id\n"
      "u,0,1,1,A\nu,10,1,1,B\nu,20,1,1,C\n"
      "u,1000,1,1,A\nu,1010,1,1,B\n"
      "u,5000,1,1,A\nu,5010,1,1,B\nu,5020,1,1,C\nu,5030,1,1,D\n");
  const Dataset s = sessionize(r.dataset, 100, 3);
  ASSERT_EQ(s.trajectories.size(), 2u);
  EXPECT_EQ(s.trajectories[0].points.size(), 3u);
  EXPECT_EQ(s.trajectories[1].points.size(), 4u);
  EXPECT_EQ(s.trajectories[1].session, 1);
  EXPECT_THROW(sessionize(r.dataset, 0, 3), Error);
}

TEST(Split, ChronologicalPerEntity) {
  const Dataset ds = sessionize(synthetic_checkin(), kCheckinSessionGap);
  const DataSplit sp = split_chronological(ds);
  EXPECT_FALSE(sp.val.trajectories.empty());
  // Every val session of an entity starts after all of its train sessions.
  std::map<std::string, std::int64_t> last_train;
  for (const auto& t : sp.train.trajectories) {
    last_train[t.entity_id] = std::max(last_train[t.entity_id], t.points.front().timestamp);
  }
  for (const auto& t : sp.val.trajectories) EXPECT_GT(t.points.front().timestamp, last_train[t.entity_id]);
  EXPECT_EQ(sp.train.vocabulary, sp.val.vocabulary);
  EXPECT_EQ(sp.train.trajectories.size() + sp.val.trajectories.size() + sp.test.trajectories.size(),
            ds.trajectories.size());
}

TEST(Split, StrictModeRejectsThinEntities) {
  auto r = parse("entity_id,timestamp,lat,lon,loc_id\nu,0,1,1,A\nu,10,1,1,B\nu,20,1,1,C\n");
  const Dataset s = sessionize(r.dataset, 100, 3);
  EXPECT_THROW(split_chronological(s, {}, true), Error);
  EXPECT_THROW(split_chronological(s, {0.5, 0.5, 0.5}), Error);
}

TEST(Stats, SummaryCounts) {
  auto r = parse("entity_id,timestamp,lat,lon,loc_id\nu,0,1,1,A\nu,10,1,1,B\nv,20,1,1,A\n");
  const DatasetStats s = stats(r.dataset);
  EXPECT_EQ(s.num_entities, 2u);
  EXPECT_EQ(s.num_locations, 2u);
  EXPECT_DOUBLE_EQ(s.avg_length, 1.5);
  EXPECT_NE(s.summary().find("2 entities"), std::string::npos);
}

TEST(WriteRecords, RoundTripWithTrajIds) {
  const Dataset ds = sessionize(synthetic_checkin({.entities = 5, .sessions_per_entity = 4}), kCheckinSessionGap);
  std::stringstream buf;
  write_records(ds, buf, true);
  const auto back = parse_records(buf, RecordSchema::kCheckinCsv, ds.name);
  EXPECT_EQ(back.dropped_rows, 0u);
  ASSERT_EQ(back.dataset.trajectories.size(), ds.trajectories.size());
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    EXPECT_EQ(back.dataset.trajectories[i].points.size(), ds.trajectories[i].points.size());
  }
}

TEST(Synthetic, SeededAndShaped) {
  const Dataset a = synthetic_checkin();
  const Dataset b = synthetic_checkin();
  EXPECT_EQ(a, b);
  const auto s = stats(a);
  EXPECT_EQ(s.num_entities, 50u);
  EXPECT_LE(s.num_locations, 200u);
  EXPECT_FALSE(a == synthetic_checkin({.seed = 8}));
  const Dataset g = synthetic_gps();
  EXPECT_EQ(g.kind, TrajectoryKind::kGps);
  EXPECT_NEAR(*stats(g).sampling_interval, 15.0, 1e-9);
  validate(a);
  validate(g);
}

TEST(Synthetic, MaterializeDescriptors) {
  DatasetDescriptor d{"x", TrajectoryKind::kCheckin, "", "", "", "synthetic:checkin:3"};
  EXPECT_EQ(materialize(d).trajectories.size(), synthetic_checkin({.seed = 3}).trajectories.size());
  d.path = "synthetic:weather";
  EXPECT_THROW(materialize(d), Error);
}

TEST(Haversine, KnownDistance) {
  // One degree of latitude is about 111.2 km.
  EXPECT_NEAR(haversine_m(0, 0, 1, 0), 111195, 100);
}

}  // namespace
}  // namespace trajagent
