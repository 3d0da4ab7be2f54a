#include <gtest/gtest.h>

#include <sstream>

#include "trajagent/error.hpp"
#include "trajagent/subprocess.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/trainer.hpp"
#include "wire_suite.hpp"

namespace trajagent {
namespace {

std::shared_ptr<const DataSplit> small_split() {
  SyntheticCheckinOptions o;
  o.entities = 10;
  o.sessions_per_entity = 8;
  return std::make_shared<const DataSplit>(prepare_split(synthetic_checkin(o)));
}

TrainRequest markov_request() {
  TrainRequest req;
  req.task = "Next_Location_Prediction";
  req.split = small_split();
  req.config = TrainerConfig::parse(builtin_config_text("markov"));
  req.seed = 1;
  return req;
}

TEST(Trainer, NativeMarkovReportsValMetric) {
  const TrainReport r = handle_train_request(markov_request(), {TrainerBinding::Kind::kNative, "markov"});
  ASSERT_TRUE(r.ok()) << r.error;
  EXPECT_EQ(r.metrics.at("val/Acc@5"), r.score);
  EXPECT_EQ(r.metrics.count("test/Acc@5"), 0u);
}

TEST(Trainer, IncludeTestAddsTestMetrics) {
  auto req = markov_request();
  req.include_test = true;
  const TrainReport r = handle_train_request(req, {TrainerBinding::Kind::kNative, "markov"});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.metrics.count("test/Acc@5"), 1u);
}

TEST(Trainer, LowerBetterScoresAreNegated) {
  const nlohmann::json reply = {{"v", 1}, {"status", "ok"}, {"score", 2.5}, {"metrics", {{"val/MAE", 2.5}}},
                                {"wall_time_s", 0.1}};
  EXPECT_DOUBLE_EQ(report_from_wire(reply, MetricDirection::kLowerBetter).score, -2.5);
  EXPECT_EQ(report_to_wire(report_from_wire(reply, MetricDirection::kLowerBetter), 2.5)["score"], 2.5);
}

TEST(Trainer, NeverThrows) {
  auto req = markov_request();
  req.config.set("order", 0);
  EXPECT_FALSE(handle_train_request(req, {TrainerBinding::Kind::kNative, "markov"}).ok());
  EXPECT_FALSE(handle_train_request(markov_request(), {TrainerBinding::Kind::kNative, "svm"}).ok());
  EXPECT_FALSE(handle_train_request(markov_request(), {TrainerBinding::Kind::kExternal, "exit 1"}).ok());
}

TEST(Trainer, RequestWireRoundTrip) {
  TempDir dir("trajagent-trainer");
  auto req = markov_request();
  const SplitPaths paths = write_split_files(*req.split, dir.path());
  req.train_path = paths.train;
  req.val_path = paths.val;
  req.test_path = paths.test;
  req.config.set("alpha", 0.5);
  const nlohmann::json wire = request_to_wire(req);
  EXPECT_EQ(wire["v"], kWireVersion);
  const TrainRequest back = request_from_wire(wire, TrainerConfig::parse(builtin_config_text("markov")));
  EXPECT_EQ(back.config, req.config);
  EXPECT_EQ(back.seed, req.seed);
  EXPECT_EQ(back.train_path, paths.train);
}

TEST(Trainer, SplitFilesShareVocabulary) {
  TempDir dir("trajagent-split");
  const auto split = small_split();
  const DataSplit back = load_split_files(write_split_files(*split, dir.path()));
  EXPECT_EQ(back.train.vocabulary, back.val.vocabulary);
  EXPECT_EQ(back.train.trajectories.size(), split->train.trajectories.size());
  EXPECT_EQ(back.test.trajectories.size(), split->test.trajectories.size());
}

TEST(Trainer, ServeTrainerInProcess) {
  std::istringstream in("not json\n");
  std::ostringstream out;
  EXPECT_EQ(serve_trainer(in, out, "markov"), 0);
  const auto reply = nlohmann::json::parse(out.str());
  EXPECT_EQ(reply["status"], "error");
}

TEST(Trainer, GoldenWireSuite) {
  const auto results = testing::run_wire_suite(std::string(TRAJAGENT_CLI) + " serve-trainer --target markov",
                                               std::string(TRAJAGENT_GOLDEN_DIR) + "/wire");
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  EXPECT_TRUE(testing::all_passed(results));
}

}  // namespace
}  // namespace trajagent
