#include <gtest/gtest.h>

#include <filesystem>

#include "trajagent/error.hpp"
#include "trajagent/store.hpp"
#include "trajagent/subprocess.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/util.hpp"
#include "trajagent/workflow.hpp"

namespace trajagent {
namespace {

namespace fs = std::filesystem;

LlmClient stub(StubPolicy policy = default_stub_policy()) {
  return LlmClient(std::make_shared<StubBackend>(std::move(policy)));
}

WorkflowOptions quick(const std::string& out_dir = "unused") {
  WorkflowOptions o;
  o.settings.thought_steps = 1;
  o.settings.criteria.max_rounds = 2;
  o.settings.criteria.max_cycles = 1;
  o.out_dir = out_dir;
  return o;
}

TEST(Understand, InScopeQueries) {
  auto llm = stub();
  Pipeline p(default_registry(), llm, quick());
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"Predict the next location each user will visit", "Next_Location_Prediction"},
      {"recommend the next POI for these check-ins", "Next_Location_Prediction"},
      {"Where does the user go next?", "Next_Location_Prediction"},
      {"Which user made this trajectory?", "Trajectory_User_Linkage"},
      {"identify the user behind each anonymous path", "Trajectory_User_Linkage"},
      {"Recover the missing points of GPS traces", "Trajectory_Completion"},
      {"Estimate the travel time of each trip", "Travel_Time_Estimation"},
      {"Generate synthetic trajectories", "Trajectory_Generation"},
      {"Map match GPS points to the road network", "Map_Matching"},
      {"What is the purpose of each visit? Predict intent", "Mobility_Intent_Prediction"},
  };
  for (const auto& [query, task] : cases) EXPECT_EQ(p.understand(query).task_name, task) << query;
}

TEST(Understand, SubtaskMapsToParent) {
  StubPolicy policy = default_stub_policy();
  policy.script("understand", {"Next_POI_Recommendation"});
  auto llm = stub(std::move(policy));
  Pipeline p(default_registry(), llm, quick());
  const TaskSpec s = p.understand("anything");
  EXPECT_EQ(s.task_name, "Next_Location_Prediction");
}

TEST(Understand, OutOfScopeListsSupportedTasks) {
  auto llm = stub();
  Pipeline p(default_registry(), llm, quick());
  for (const char* q : {"What's the weather tomorrow?", "", "Translate this poem"}) {
    try {
      p.understand(q);
      FAIL() << q;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kOutOfScope);
      EXPECT_NE(e.detail().find("Next_Location_Prediction"), std::string::npos);
    }
  }
}

TEST(Plan, RegeneratesPastFailingCandidate) {
  Registry r;
  ModelDescriptor broken{"Broken",
                         {"Next_Location_Prediction"},
                         {TrajectoryKind::kCheckin},
                         {TrainerBinding::Kind::kExternal, "exit 7"},
                         "builtin:markov",
                         {"Synthetic_Checkin"},
                         "always fails"};
  const Registry d = default_registry();
  for (const auto& t : d.tasks()) r.add_task(t);
  r.add_model(broken);
  for (const auto& m : d.models()) r.add_model(m);
  for (const auto& ds : d.datasets()) r.add_dataset(ds);
  for (const auto& pol : d.policies()) r.add_policy(pol);

  auto llm = stub();
  Pipeline p(r, llm, quick());
  const ExecutionPlan plan = p.plan(p.understand("predict the next location"));
  EXPECT_TRUE(plan.verified);
  EXPECT_EQ(plan.model, "Markov");
  EXPECT_EQ(plan.regenerations, 1);
  ASSERT_EQ(plan.rejected.size(), 1u);
  EXPECT_NE(plan.rejected[0].find("Broken"), std::string::npos);
  EXPECT_EQ(plan.stages, (std::vector<std::string>{"DA", "PO", "JO"}));
}

TEST(Plan, ExhaustionAfterRetries) {
  Registry r = default_registry();
  for (int i = 0; i < 5; ++i) {
    r.add_model({"Broken" + std::to_string(i),
                 {"Trajectory_Completion"},
                 {TrajectoryKind::kGps},
                 {TrainerBinding::Kind::kExternal, "exit 1"},
                 "builtin:markov",
                 {"Synthetic_GPS"},
                 ""});
  }
  // Put the broken ones ahead of Markov by removing its verified status.
  Registry r2;
  for (const auto& t : r.tasks()) r2.add_task(t);
  for (auto m : r.models()) {
    if (m.name == "Markov") m.verified_datasets.clear();
    r2.add_model(m);
  }
  for (const auto& ds : r.datasets()) r2.add_dataset(ds);
  for (const auto& pol : r.policies()) r2.add_policy(pol);
  auto llm = stub();
  WorkflowOptions o = quick();
  o.max_plan_retries = 2;
  Pipeline p(r2, llm, o);
  try {
    p.plan({"Trajectory_Completion", "", "", ""});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlanningExhausted);
    EXPECT_NE(e.detail().find("3 candidate(s)"), std::string::npos) << e.detail();
  }
}

TEST(Plan, GpsDataUsesParameterStageOnly) {
  auto llm = stub();
  Pipeline p(default_registry(), llm, quick());
  const ExecutionPlan plan = p.plan({"Trajectory_Completion", "", "", ""});
  EXPECT_EQ(plan.stages, (std::vector<std::string>{"PO"}));
}

TEST(Execute, FailingTrainerYieldsNotesNotThrow) {
  Registry r = default_registry();
  r.add_model({"Broken", {"Next_Location_Prediction"}, {TrajectoryKind::kCheckin},
               {TrainerBinding::Kind::kExternal, "exit 1"}, "builtin:markov", {}, ""});
  auto llm = stub();
  Pipeline p(r, llm, quick());
  ExecutionPlan plan;
  plan.task = "Next_Location_Prediction";
  plan.model = "Broken";
  plan.dataset = "Synthetic_Checkin";
  plan.stages = {"PO"};
  plan.criteria = quick().settings.criteria;
  MemoryStore memory;
  const OptimizationResult res = p.execute(plan, memory);
  EXPECT_FALSE(res.origin_ok);
  EXPECT_FALSE(res.notes.empty());
  EXPECT_FALSE(p.state("optimization").notes.empty());
}

TEST(Reflect, BoundedNotes) {
  auto llm = stub();
  AgentState s;
  s.agent = "planning";
  s.note_capacity = 2;
  EXPECT_FALSE(reflect(s, {true, "fine", {}}, llm));
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(reflect(s, {false, "x", {"cause " + std::to_string(i)}}, llm));
  ASSERT_EQ(s.notes.size(), 2u);
  EXPECT_NE(s.notes.back().find("cause 3"), std::string::npos);
  StubPolicy broken;
  auto dead = stub(std::move(broken));
  EXPECT_FALSE(reflect(s, {false, "x", {"y"}}, dead));
  EXPECT_EQ(s.notes.size(), 2u);
}

TEST(Reflect, MemoryEvictsOldest) {
  AgentState s;
  s.memory_capacity = 3;
  for (int i = 0; i < 5; ++i) s.remember({{"i", i}});
  ASSERT_EQ(s.memory.size(), 3u);
  EXPECT_EQ(s.memory.front()["i"], 2);
  s.add_note("a");
  s.add_note("a");
  EXPECT_EQ(s.notes.size(), 1u);
}

ExperimentRecord rec(int round, Stage stage, double score, std::string text) {
  ExperimentRecord r;
  r.round = round;
  r.cycle = round == 0 ? 0 : 1;
  r.stage = stage;
  r.score = score;
  r.status = RecordStatus::kOk;
  r.action_text = std::move(text);
  return r;
}

TEST(Summarize, DeltaAndPath) {
  OptimizationResult res;
  res.origin_ok = true;
  res.origin_score = 0.1795;
  res.best_score = 0.2717;
  res.best_round = 1;
  res.evaluations = 3;
  const std::vector<ExperimentRecord> records = {rec(0, Stage::kBase, 0.1795, "defaults"),
                                                 rec(1, Stage::kDA, 0.2717, "[1]\n{}"),
                                                 rec(2, Stage::kPO, 0.2, "{'order': 2}")};
  SummaryContext ctx;
  ctx.metric = "Acc@5";
  const SummaryReport rep = summarize(res, records, ctx);
  EXPECT_NEAR(rep.delta * 100, 51.36, 0.01);
  ASSERT_EQ(rep.path.size(), 2u);
  EXPECT_EQ(rep.path[1].round, 1);
  const std::string md = rep.to_markdown();
  EXPECT_NE(md.find("[1]<br>{}"), std::string::npos);
  EXPECT_EQ(rep.to_json()["evaluations"], 2);  // baseline excluded
}

TEST(Summarize, LowerBetterReportsRawValues) {
  OptimizationResult res;
  res.origin_ok = true;
  res.origin_score = -4.0;
  res.best_score = -3.0;
  const std::vector<ExperimentRecord> records = {rec(0, Stage::kBase, -4.0, ""), rec(1, Stage::kPO, -3.0, "")};
  SummaryContext ctx;
  ctx.metric = "MAE";
  ctx.direction = MetricDirection::kLowerBetter;
  const SummaryReport rep = summarize(res, records, ctx);
  EXPECT_DOUBLE_EQ(*rep.origin, 4.0);
  EXPECT_DOUBLE_EQ(rep.path.back().score, 3.0);
  EXPECT_DOUBLE_EQ(rep.delta, 0.25);
}

TEST(Store, IdsAndReports) {
  TempDir dir("trajagent-store");
  ExperimentStore store(dir.path());
  const auto id = ExperimentStore::experiment_id({{"q", "x"}});
  EXPECT_EQ(id.size(), 16u);
  EXPECT_EQ(id, ExperimentStore::experiment_id({{"q", "x"}}));
  EXPECT_NE(id, ExperimentStore::experiment_id({{"q", "y"}}));
  store.create(id);
  EXPECT_TRUE(store.list().empty());
  SummaryReport rep;
  rep.task = "T";
  store.write_report(id, rep);
  EXPECT_EQ(store.list(), (std::vector<std::string>{id}));
  EXPECT_EQ(store.read_report_json(id)["task"], "T");
  EXPECT_THROW(store.read_report_markdown("0000000000000000"), Error);
}

TEST(ResolveData, NamesPathsAndMissing) {
  Registry r = default_registry();
  EXPECT_EQ(resolve_data(r, "Synthetic_Checkin"), "Synthetic_Checkin");
  EXPECT_EQ(resolve_data(r, ""), "");
  TempDir dir("trajagent-data");
  const std::string csv = dir.path() + "/visits.csv";
  SyntheticCheckinOptions o;
  o.entities = 5;
  o.sessions_per_entity = 5;
  write_records(synthetic_checkin(o), csv);
  const std::string name = resolve_data(r, csv);
  const auto desc = r.find_dataset(name);
  ASSERT_TRUE(desc.has_value());
  EXPECT_EQ(desc->kind, TrajectoryKind::kCheckin);
  try {
    resolve_data(r, dir.path() + "/absent.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Pipeline, RunWritesArtifactsDeterministically) {
  TempDir a("trajagent-run-a"), b("trajagent-run-b");
  auto run_in = [](const std::string& dir) {
    auto llm = stub();
    Pipeline p(default_registry(), llm, quick(dir));
    return p.run("predict the next location of each user");
  };
  const RunOutcome ra = run_in(a.path());
  const RunOutcome rb = run_in(b.path());
  ASSERT_EQ(ra.exit_code, kExitOk) << ra.message;
  EXPECT_EQ(ra.experiment_id, rb.experiment_id);
  for (const char* f : {"query.txt", "plan.json", "records.jsonl", "best.json", "report.md", "report.json",
                        "llm_log.jsonl"}) {
    EXPECT_TRUE(fs::exists(fs::path(ra.experiment_dir) / f)) << f;
  }
  EXPECT_EQ(read_file(ra.experiment_dir + "/report.json"), read_file(rb.experiment_dir + "/report.json"));
}

TEST(Pipeline, ExitCodes) {
  TempDir dir("trajagent-exit");
  auto llm = stub();
  Pipeline p(default_registry(), llm, quick(dir.path()));
  EXPECT_EQ(p.run("tell me a joke").exit_code, kExitOutOfScope);
  EXPECT_EQ(p.run("match GPS points to road segments (map match)").exit_code, kExitPlanningExhausted);
  WorkflowOptions o = quick(dir.path());
  o.data = dir.path() + "/missing.csv";
  Pipeline q(default_registry(), llm, o);
  EXPECT_EQ(q.run("predict the next location").exit_code, kExitIo);
}

}  // namespace
}  // namespace trajagent
