#include <gtest/gtest.h>

#include "trajagent/error.hpp"
#include "trajagent/registry.hpp"
#include "trajagent/subprocess.hpp"

namespace trajagent {
namespace {

TEST(Registry, DefaultCatalogue) {
  const Registry r = default_registry();
  EXPECT_EQ(r.task_names().size(), 7u);
  const auto nlp = r.find_task("Next_Location_Prediction");
  ASSERT_TRUE(nlp.has_value());
  EXPECT_EQ(nlp->metric, "Acc@5");
  EXPECT_EQ(r.find_task("Trajectory_User_Linkage")->metric, "Hit@5");
  EXPECT_FALSE(r.find_model("Nope").has_value());
}

TEST(Registry, DuplicateAndInvalidNamesRejected) {
  Registry r = default_registry();
  try {
    r.add_model(*r.find_model("Markov"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateName);
  }
  ModelDescriptor m = *r.find_model("Markov");
  m.name = "";
  EXPECT_THROW(r.add_model(m), Error);
}

TEST(Registry, MatchOrdersVerifiedFirst) {
  Registry r = default_registry();
  ModelDescriptor extra = *r.find_model("Markov");
  extra.name = "Markov_Unverified";
  extra.verified_datasets.clear();
  r.add_model(extra);
  const auto cands = r.match({"Next_Location_Prediction", "", "", ""});
  ASSERT_GE(cands.size(), 3u);
  EXPECT_TRUE(cands.front().verified);
  EXPECT_EQ(cands.front().model.name, "Markov");
  EXPECT_FALSE(cands.back().verified);
  for (const auto& c : cands) EXPECT_EQ(c.dataset.kind, TrajectoryKind::kCheckin);
}

TEST(Registry, MatchWithoutCandidateThrows) {
  const Registry r = default_registry();
  try {
    r.match({"Map_Matching", "", "", ""});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCandidate);
  }
}

TEST(Registry, StagePolicies) {
  const Registry r = default_registry();
  using S = std::vector<std::string>;
  EXPECT_EQ(r.stages_for("Next_Location_Prediction", TrajectoryKind::kCheckin, TrainerBinding::Kind::kNative),
            (S{"DA", "PO", "JO"}));
  EXPECT_EQ(r.stages_for("Trajectory_Completion", TrajectoryKind::kGps, TrainerBinding::Kind::kNative), (S{"PO"}));
  EXPECT_EQ(r.stages_for("Next_Location_Prediction", TrajectoryKind::kCheckin, TrainerBinding::Kind::kLlm),
            (S{"PRO"}));
}

TEST(Registry, SaveLoadRoundTrip) {
  const Registry r = default_registry();
  TempDir dir("trajagent-reg");
  r.save(dir.path());
  const Registry back = Registry::load(dir.path());
  EXPECT_EQ(back.task_names().size(), r.task_names().size());
  EXPECT_EQ(to_json(*back.find_model("Markov")), to_json(*r.find_model("Markov")));
  EXPECT_EQ(back.policies().size(), r.policies().size());
  EXPECT_EQ(back.datasets().size(), r.datasets().size());
}

TEST(Registry, JsonRoundTrip) {
  const Registry r = default_registry();
  for (const auto& t : r.tasks()) EXPECT_EQ(to_json(task_from_json(to_json(t))), to_json(t));
  for (const auto& p : r.policies()) EXPECT_EQ(to_json(policy_from_json(to_json(p))), to_json(p));
}

}  // namespace
}  // namespace trajagent
