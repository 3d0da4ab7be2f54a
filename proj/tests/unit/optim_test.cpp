#include <gtest/gtest.h>

#include "trajagent/error.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/prompts.hpp"
#include "trajagent/subprocess.hpp"
#include "trajagent/synth.hpp"

namespace trajagent {
namespace {

std::shared_ptr<const DataSplit> split() {
  static const auto s = [] {
    SyntheticCheckinOptions o;
    o.entities = 15;
    o.sessions_per_entity = 10;
    return std::make_shared<const DataSplit>(prepare_split(synthetic_checkin(o)));
  }();
  return s;
}

OptimTarget target(const std::string& model = "Markov") {
  const Registry r = default_registry();
  OptimTarget t;
  t.task = *r.find_task("Next_Location_Prediction");
  t.model = *r.find_model(model);
  t.split = split();
  t.base_config = load_model_config(t.model);
  return t;
}

OptimSettings fast() {
  OptimSettings s;
  s.thought_steps = 1;
  s.criteria.max_rounds = 4;
  s.criteria.max_cycles = 1;
  return s;
}

LlmClient stub(StubPolicy policy = default_stub_policy()) {
  return LlmClient(std::make_shared<StubBackend>(std::move(policy)));
}

TEST(Optim, Improvement) {
  EXPECT_DOUBLE_EQ(improvement(0.1795, 0.2717), (0.2717 - 0.1795) / 0.1795);
  EXPECT_DOUBLE_EQ(improvement(-4.0, -3.0), 0.25);
  EXPECT_DOUBLE_EQ(improvement(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(improvement(0.5, 1.0, false), 0.0);
}

TEST(Optim, StopCriteriaValidation) {
  StopCriteria c;
  c.validate();
  c.patience = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Optim, BaselineIsRoundZero) {
  auto llm = stub();
  MemoryStore memory;
  Optimizer opt(target(), llm, memory, fast());
  const ExperimentRecord& base = opt.baseline();
  EXPECT_EQ(base.round, 0);
  EXPECT_EQ(base.stage, Stage::kBase);
  EXPECT_TRUE(base.ok());
  opt.baseline();
  EXPECT_EQ(memory.long_term().size(), 1u);
}

TEST(Optim, UnparsableRepliesBecomeFailedRounds) {
  StubPolicy p = default_stub_policy();
  p.set("po_action", [](const ChatRequest&) { return std::string("I would rather not."); });
  auto llm = stub(std::move(p));
  MemoryStore memory;
  auto s = fast();
  s.criteria.patience = 2;
  Optimizer opt(target(), llm, memory, s);
  const StageOutcome out = opt.run_stage_loop(Stage::kPO);
  EXPECT_EQ(out.stop_reason, "patience");
  EXPECT_EQ(out.rounds, 2);
  const auto& last = memory.long_term().back();
  EXPECT_FALSE(last.ok());
  EXPECT_NE(last.feedback.find("RetryExhausted"), std::string::npos) << last.feedback;
}

TEST(Optim, PatienceStopsFlatLoop) {
  StubPolicy p = default_stub_policy();
  p.set("po_action", [](const ChatRequest&) { return std::string("{'order': 1}"); });
  auto llm = stub(std::move(p));
  MemoryStore memory;
  auto s = fast();
  s.criteria.max_rounds = 10;
  Optimizer opt(target(), llm, memory, s);
  const StageOutcome out = opt.run_stage_loop(Stage::kPO);
  EXPECT_EQ(out.stop_reason, "patience");
  EXPECT_EQ(out.rounds, 1 + s.criteria.patience);
}

TEST(Optim, MaxRoundsAndTarget) {
  auto llm = stub();
  MemoryStore memory;
  auto s = fast();
  s.criteria.max_rounds = 2;
  s.criteria.patience = 10;
  Optimizer opt(target(), llm, memory, s);
  EXPECT_EQ(opt.run_stage_loop(Stage::kPO).stop_reason, "max_rounds");
  MemoryStore memory2;
  s.criteria.target = 0.0;
  Optimizer hit(target(), llm, memory2, s);
  const auto out = hit.run_stage_loop(Stage::kDA);
  EXPECT_EQ(out.stop_reason, "target");
  EXPECT_EQ(out.rounds, 0);
}

TEST(Optim, AntiTrapReproposesBelowBestRepeat) {
  const std::string bad = "[6]\n{6: {'mask_ratio': 1.0}}";
  const std::string other = "[8]\n{8: {'keep_prob': 0.9}}";
  StubPolicy p = default_stub_policy();
  p.script("da_action", {bad, bad, other});
  auto llm = stub(std::move(p));
  MemoryStore memory;
  auto s = fast();
  s.criteria.max_rounds = 2;
  Optimizer opt(target(), llm, memory, s);
  opt.run_stage_loop(Stage::kDA);
  const auto& recs = memory.long_term();
  ASSERT_EQ(recs.size(), 3u);
  ASSERT_TRUE(recs[1].ok());
  ASSERT_LT(recs[1].score, recs[0].score);
  EXPECT_EQ(recs[2].action_text, other);
}

TEST(Optim, JointScheduleOrdersStagesPerCycle) {
  auto llm = stub();
  MemoryStore memory;
  auto s = fast();
  s.criteria.max_cycles = 2;
  s.criteria.max_rounds = 2;
  Optimizer opt(target(), llm, memory, s);
  const OptimizationResult r = opt.run({"DA", "PO", "JO"});
  ASSERT_EQ(r.stages.size(), 4u);
  const Stage want[] = {Stage::kDA, Stage::kPO, Stage::kDA, Stage::kPO};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.stages[i].stage, want[i]);
    EXPECT_EQ(r.stages[i].cycle, static_cast<int>(i / 2 + 1));
  }
  int prev_cycle = 0;
  Stage prev_stage = Stage::kBase;
  for (const auto& rec : memory.long_term()) {
    if (rec.cycle == prev_cycle) EXPECT_GE(static_cast<int>(rec.stage), static_cast<int>(prev_stage));
    prev_cycle = rec.cycle;
    prev_stage = rec.stage;
  }
  EXPECT_GE(r.best_score, r.origin_score);
  EXPECT_EQ(r.evaluations, memory.long_term().size() - 1);  // baseline excluded
}

TEST(Optim, RunsAreDeterministic) {
  auto once = [] {
    auto llm = stub();
    MemoryStore memory;
    Optimizer opt(target(), llm, memory, fast());
    opt.run({"DA", "PO"});
    opt.finalize();
    return opt.result().to_json().dump();
  };
  EXPECT_EQ(once(), once());
}

TEST(Optim, ResumeReplaysLoggedRounds) {
  TempDir dir("trajagent-resume");
  const std::string log = dir.path() + "/records.jsonl";
  std::string first;
  {
    auto llm = stub();
    MemoryStore memory(kDefaultMemoryWindow, log);
    Optimizer opt(target(), llm, memory, fast());
    opt.run_stage_loop(Stage::kPO);
    first = opt.result().to_json().dump();
  }
  auto llm = stub();
  MemoryStore memory = MemoryStore::open(log);
  const std::size_t logged = memory.long_term().size();
  Optimizer opt(target(), llm, memory, fast());
  opt.run_stage_loop(Stage::kPO);
  EXPECT_EQ(memory.long_term().size(), logged);
  for (const auto& call : llm.log().records()) EXPECT_NE(call.template_name, "po_action");
  EXPECT_EQ(opt.result().to_json().dump(), first);
}

TEST(Optim, PromptStagePairsBestItems) {
  auto llm = stub();
  MemoryStore memory;
  auto s = fast();
  s.prompt_items = 20;
  s.criteria.max_rounds = 3;
  s.criteria.patience = 5;
  Optimizer opt(target("LLM_ZS"), llm, memory, s);
  const auto r = opt.run({"PRO"});
  const auto& recs = memory.long_term();
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].stage, Stage::kBase);
  EXPECT_EQ(recs[0].items.size(), 20u);
  for (std::size_t i = 1; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].stage, Stage::kPRO);
    EXPECT_EQ(recs[i].action["examples"].size(), 2u);
  }
  EXPECT_NE(recs[1].action, recs[2].action);
  EXPECT_TRUE(r.best_plan.ops.empty());
}

TEST(Search, RandomSearchCurveIsMonotone) {
  Evaluator ev(target(), fast());
  const SearchResult r = random_search(ev, Stage::kPO, 5, 3);
  EXPECT_EQ(r.records.size(), 6u);
  ASSERT_EQ(r.curve.size(), 5u);
  for (std::size_t i = 1; i < r.curve.size(); ++i) EXPECT_GE(r.curve[i], r.curve[i - 1]);
  std::set<std::string> configs;
  for (const auto& rec : r.records) configs.insert(rec.action.dump());
  EXPECT_EQ(configs.size(), r.records.size());
  EXPECT_EQ(random_search(ev, Stage::kPO, 5, 3).curve, r.curve);
  EXPECT_THROW(random_search(ev, Stage::kPRO, 1, 0), Error);
}

TEST(Search, JointSearchSamplesPlanAndConfig) {
  Evaluator ev(target(), fast());
  const SearchResult r = random_joint_search(ev, 4, 9);
  ASSERT_EQ(r.records.size(), 5u);
  for (std::size_t i = 1; i < r.records.size(); ++i) {
    EXPECT_FALSE(r.records[i].action["plan"]["ops"].empty());
    EXPECT_TRUE(r.records[i].action.contains("config"));
  }
  EXPECT_EQ(random_joint_search(ev, 4, 9).curve, r.curve);
}

TEST(Search, GridSearchCoversProduct) {
  Evaluator ev(target(), fast());
  const SearchSpace grid = {{"order", {1, 2}}, {"alpha", {0.1, 1.0, 2.0}}};
  const SearchResult r = grid_search(ev, grid);
  EXPECT_EQ(r.records.size(), 1u + 6u);
  EXPECT_GE(r.best, r.origin);
}

TEST(Search, CurveCsv) {
  Evaluator ev(target(), fast());
  const SearchResult r = random_search(ev, Stage::kDA, 2, 1);
  const std::string csv = curve_csv({{"random", r.records}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,evaluation,score,best");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(best_curve(r.records), r.curve);
}

}  // namespace
}  // namespace trajagent
