// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "trajagent/error.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/subprocess.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/util.hpp"
#include "trajagent/workflow.hpp"
#include "wire_suite.hpp"

using namespace trajagent;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Best relative Acc@5 gain over the baseline found by joint random search
// with budget 50 (seed 0) on the default benchmark. Recomputed below; a mismatch means the benchmark drifted.
constexpr double kRandomHeadroom50 = 0.11819887429643518;
constexpr double kMinDelta = 0.05;

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LlmClient stub_client() { return LlmClient(std::make_shared<StubBackend>()); }

OptimTarget benchmark_target(Pipeline& pipeline) {
  const Registry& r = pipeline.registry();
  const auto model = *r.find_model("Markov");
  return {*r.find_task("Next_Location_Prediction"), model, pipeline.split_for("Synthetic_Checkin"),
          load_model_config(model)};
}

Check metric_oracles() {
  const auto r = testing::run_metric_oracle_suite(200, 100, 2024, 1e-12);
  Check c{"metric oracle suite", r.ok() && r.seconds < 5.0, {}};
  c.detail = std::to_string(r.checks) + " checks, max error " + format_double(r.max_error) + ", " +
             format_fixed(r.seconds, 2) + "s";
  if (!r.ok()) c.detail += "; " + r.failures.front();
  return c;
}

Check augment_properties() {
  const auto r = testing::run_augment_property_suite(50, 99);
  Check c{"augmentation property suite", r.ok() && r.seconds < 30.0, {}};
  c.detail = std::to_string(r.checks) + " checks, " + format_fixed(r.seconds, 2) + "s";
  if (!r.ok()) c.detail += "; " + r.failures.front();
  return c;
}

bool da_precedes_po(const std::string& records_path, std::string* why) {
  std::map<int, std::vector<Stage>> by_cycle;
  std::istringstream in(read_file(records_path));
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty()) continue;
    const ExperimentRecord r = record_from_json(json::parse(line));
    if (r.stage != Stage::kBase) by_cycle[r.cycle].push_back(r.stage);
  }
  if (by_cycle.size() != 2) {
    *why = std::to_string(by_cycle.size()) + " cycle(s) in the log";
    return false;
  }
  for (const auto& [cycle, stages] : by_cycle) {
    bool seen_po = false, seen_da = false;
    for (Stage s : stages) {
      if (s == Stage::kPO) seen_po = true;
      if (s == Stage::kDA) {
        seen_da = true;
        if (seen_po) {
          *why = "cycle " + std::to_string(cycle) + " has a DA round after a PO round";
          return false;
        }
      }
    }
    if (!seen_da || !seen_po) {
      *why = "cycle " + std::to_string(cycle) + " lacks a DA or PO round";
      return false;
    }
  }
  return true;
}

Check joint_run() {
  Check c{"deterministic joint run", false, {}};
  TempDir a("trajagent-acc-a"), b("trajagent-acc-b");
  RunOutcome runs[2];
  double elapsed[2] = {0, 0};
  const std::string dirs[2] = {a.path(), b.path()};
  for (int i = 0; i < 2; ++i) {
    auto llm = stub_client();
    WorkflowOptions o;  // defaults: memory 10, thought steps 10, patience 3, 2 cycles
    o.out_dir = dirs[i];
    Pipeline p(default_registry(), llm, o);
    const auto t0 = std::chrono::steady_clock::now();
    runs[i] = p.run("Predict the next location each user will visit on the check-in benchmark");
    elapsed[i] = seconds_since(t0);
  }
  if (runs[0].exit_code != kExitOk || !runs[0].report) {
    c.detail = "run failed: " + runs[0].message;
    return c;
  }
  const SummaryReport& rep = *runs[0].report;
  std::string why;
  const bool ordered = da_precedes_po(runs[0].experiment_dir + "/records.jsonl", &why);
  const bool identical =
      read_file(runs[0].experiment_dir + "/report.json") == read_file(runs[1].experiment_dir + "/report.json");

  // Headroom oracle: the threshold sits below what plain random search finds.
  auto llm = stub_client();
  Pipeline p(default_registry(), llm, {});
  Evaluator ev(benchmark_target(p), {});
  double headroom = 0;
  {
    const SearchResult r = random_joint_search(ev, 50, 0);
    headroom = improvement(r.origin, r.best);
  }
  const bool oracle_ok = headroom >= kMinDelta && std::abs(headroom - kRandomHeadroom50) < 1e-9;

  c.passed = rep.delta >= kMinDelta && ordered && identical && elapsed[0] < 60.0 && oracle_ok &&
             rep.model == "Markov" && rep.dataset == "Synthetic_Checkin";
  c.detail = "origin " + format_fixed(rep.origin.value_or(0), 4) + " -> final " +
             format_fixed(rep.final_score.value_or(0), 4) + ", delta " + format_fixed(rep.delta * 100, 2) + "%, " +
             std::to_string(rep.evaluations) + " evaluations, " + format_fixed(elapsed[0], 1) + "s; DA before PO " +
             (ordered ? "yes" : "no (" + why + ")") + "; report.json identical " + (identical ? "yes" : "no") +
             "; random-search headroom " + format_double(headroom) +
             (oracle_ok ? "" : " (frozen " + format_double(kRandomHeadroom50) + ")");
  return c;
}

// First evaluation (1-based) at which `curve` reaches `target`; 0 if never
// within `budget`.
std::size_t evaluations_to_reach(const std::vector<double>& curve, double target, std::size_t budget) {
  for (std::size_t i = 0; i < curve.size() && i < budget; ++i) {
    if (curve[i] >= target) return i + 1;
  }
  return 0;
}

Check trial_efficiency() {
  Check c{"trial efficiency", false, {}};
  auto llm = stub_client();
  Pipeline p(default_registry(), llm, {});
  const OptimTarget target = benchmark_target(p);
  constexpr std::size_t kBudget = 20;
  std::vector<std::pair<std::string, std::vector<ExperimentRecord>>> runs;

  // Gate: the default joint agent against random search over the same
  // joint (plan x config) action space.
  Evaluator ev(target, {});
  const SearchResult random = random_joint_search(ev, kBudget, 0);
  MemoryStore memory(kDefaultMemoryWindow);
  Optimizer agent(target, llm, memory, {});
  agent.run_joint();
  const std::vector<double> curve = best_curve(memory.long_term());
  const std::size_t reached = evaluations_to_reach(curve, random.best, kBudget);
  runs.emplace_back("random_jo", random.records);
  runs.emplace_back("agent_jo", memory.long_term());
  std::string detail = "JO: random best@20 " + format_fixed(random.best, 4) + ", agent " +
                       (reached ? "reaches it at evaluation " + std::to_string(reached)
                                : "best@20 " + format_fixed(curve.empty() ? 0 : curve[std::min(curve.size(), kBudget) - 1], 4));

  // Single-stage loops, reported alongside.
  for (Stage stage : {Stage::kDA, Stage::kPO}) {
    Evaluator stage_ev(target, {});
    const SearchResult stage_random = random_search(stage_ev, stage, kBudget, 0);
    OptimSettings s;
    s.criteria.max_rounds = static_cast<int>(kBudget);
    s.criteria.patience = static_cast<int>(kBudget);
    MemoryStore stage_memory(s.memory_size);
    Optimizer stage_agent(target, llm, stage_memory, s);
    stage_agent.run_stage_loop(stage);
    const auto stage_curve = best_curve(stage_memory.long_term());
    const std::size_t n = evaluations_to_reach(stage_curve, stage_random.best, kBudget);
    const std::string name(to_string(stage));
    detail += "; " + name + " alone: random " + format_fixed(stage_random.best, 4) + ", agent " +
              (n ? "at evaluation " + std::to_string(n) : "best " + format_fixed(stage_curve.back(), 4));
    runs.emplace_back("random_" + to_lower(name), stage_random.records);
    runs.emplace_back("agent_" + to_lower(name), stage_memory.long_term());
  }
  const std::string csv_path = (fs::current_path() / "trial_efficiency.csv").string();
  write_file_atomic(csv_path, curve_csv(runs));
  c.passed = reached > 0;
  c.detail = detail + "; curves in " + csv_path;
  return c;
}

ProcessResult cli(const std::string& args) { return run_process(std::string(TRAJAGENT_CLI) + " " + args, "", 300.0); }

Check workflow_robustness() {
  Check c{"workflow robustness", false, {}};
  std::vector<std::string> problems;

  // 20 templated in-scope queries, task extraction only.
  const std::vector<std::pair<std::string, std::string>> phrases = {
      {"predict the next location each user will visit", "Next_Location_Prediction"},
      {"identify which user each trajectory belongs to", "Trajectory_User_Linkage"},
      {"recover the missing points of the GPS trajectories", "Trajectory_Completion"},
      {"estimate the travel time of every trip", "Travel_Time_Estimation"},
      {"generate synthetic trajectories that look like the real ones", "Trajectory_Generation"},
  };
  const std::vector<std::string> templates = {"I want to {}.", "Can you {}?", "Build a model to {} on my data.",
                                              "Task: {}"};
  auto llm = stub_client();
  Pipeline p(default_registry(), llm, {});
  int correct = 0, total = 0;
  for (const auto& t : templates) {
    for (const auto& [phrase, task] : phrases) {
      std::string q = t;
      q.replace(q.find("{}"), 2, phrase);
      ++total;
      try {
        if (p.understand(q).task_name == task) {
          ++correct;
        } else {
          problems.push_back("misread '" + q + "'");
        }
      } catch (const std::exception& e) {
        problems.push_back("'" + q + "': " + e.what());
      }
    }
  }

  TempDir dir("trajagent-acc-wf");
  const std::string out = " --out " + dir.path() + "/exp --thought-steps 1 --max-rounds 2 --max-cycles 1";
  const std::vector<std::string> out_of_scope = {"What will the weather be tomorrow?", "Translate this paragraph",
                                                 "Write a poem about trains", "Sort these numbers",
                                                 "Summarize the news"};
  int scoped = 0;
  for (const auto& q : out_of_scope) {
    const auto r = cli("run '" + q + "'" + out);
    bool listed = true;
    for (const auto& t : p.supported_tasks()) listed = listed && r.err.find(t) != std::string::npos;
    if (r.exit_code == kExitOutOfScope && listed) {
      ++scoped;
    } else {
      problems.push_back("out-of-scope '" + q + "' exited " + std::to_string(r.exit_code));
    }
  }

  // Injected invalid models: one broken candidate ahead of a working one,
  // then only broken candidates.
  auto broken = [](const std::string& name) {
    return ModelDescriptor{name,
                           {"Next_Location_Prediction"},
                           {TrajectoryKind::kCheckin},
                           {TrainerBinding::Kind::kExternal, "echo broken >&2; exit 1"},
                           "builtin:markov",
                           {"Synthetic_Checkin"},
                           "injected failing trainer"};
  };
  int regenerations = -1;
  {
    Registry r;
    const Registry d = default_registry();
    for (const auto& t : d.tasks()) r.add_task(t);
    r.add_model(broken("Broken_A"));
    for (const auto& m : d.models()) r.add_model(m);
    for (const auto& ds : d.datasets()) r.add_dataset(ds);
    for (const auto& pol : d.policies()) r.add_policy(pol);
    r.save(dir.path() + "/reg1");
    const auto res = cli("--registry " + dir.path() + "/reg1 run 'predict the next location'" + out);
    if (res.exit_code == kExitOk) {
      const std::string exp_dir(trim(split(std::string(trim(res.out)), '\n').back()));
      regenerations = json::parse(read_file(exp_dir + "/plan.json")).value("regenerations", -1);
    }
    if (res.exit_code != kExitOk || regenerations < 1 || regenerations > 3) {
      problems.push_back("one broken model: exit " + std::to_string(res.exit_code) + ", regenerations " +
                         std::to_string(regenerations) + " " + res.err);
    }
  }
  int exhausted_exit = -1;
  {
    Registry r;
    const Registry d = default_registry();
    for (const auto& t : d.tasks()) r.add_task(t);
    for (const char* n : {"Broken_A", "Broken_B", "Broken_C", "Broken_D", "Broken_E"}) r.add_model(broken(n));
    for (const auto& ds : d.datasets()) r.add_dataset(ds);
    for (const auto& pol : d.policies()) r.add_policy(pol);
    r.save(dir.path() + "/reg2");
    const auto res = cli("--registry " + dir.path() + "/reg2 run 'predict the next location'" + out);
    exhausted_exit = res.exit_code;
    const bool four_tries = res.err.find("after 4 candidate(s)") != std::string::npos;
    if (res.exit_code != kExitPlanningExhausted || !four_tries) {
      problems.push_back("broken models only: exit " + std::to_string(res.exit_code) + " " + res.err);
    }
  }

  c.passed = problems.empty();
  c.detail = std::to_string(correct) + "/" + std::to_string(total) + " tasks extracted; " + std::to_string(scoped) +
             "/5 out-of-scope exit 2; broken model regenerations " + std::to_string(regenerations) +
             "; all-broken exit " + std::to_string(exhausted_exit);
  if (!problems.empty()) c.detail += "; " + problems.front();
  return c;
}

Check delta_arithmetic() {
  OptimizationResult res;
  res.origin_ok = true;
  res.origin_score = 0.1795;
  res.best_score = 0.2717;
  res.best_round = 1;
  ExperimentRecord base, best;
  base.stage = Stage::kBase;
  base.status = RecordStatus::kOk;
  base.score = 0.1795;
  best.round = 1;
  best.cycle = 1;
  best.stage = Stage::kDA;
  best.status = RecordStatus::kOk;
  best.score = 0.2717;
  SummaryContext ctx;
  ctx.metric = "Acc@5";
  const SummaryReport rep = summarize(res, {base, best}, ctx);
  const double pct = rep.delta * 100;
  return {"delta arithmetic", std::abs(pct - 51.36) <= 0.01, "delta " + format_fixed(pct, 4) + "%"};
}

Check wire_suite() {
  const auto results = testing::run_wire_suite(std::string(TRAJAGENT_CLI) + " serve-trainer --target markov",
                                               std::string(TRAJAGENT_GOLDEN_DIR) + "/wire");
  std::size_t passed = 0;
  std::string first_failure;
  for (const auto& r : results) {
    if (r.passed) {
      ++passed;
    } else if (first_failure.empty()) {
      first_failure = r.name + ": " + r.detail;
    }
  }
  Check c{"protocol conformance", testing::all_passed(results), {}};
  c.detail = std::to_string(passed) + "/" + std::to_string(results.size()) + " golden cases";
  if (!first_failure.empty()) c.detail += "; " + first_failure;
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Check()>> checks = {metric_oracles, augment_properties, joint_run,
                                                      trial_efficiency, workflow_robustness, delta_arithmetic,
                                                      wire_suite};
  bool all = true;
  for (const auto& run : checks) {
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("uncaught: ") + e.what();
    }
    all = all && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << std::endl;
  }
  return all ? 0 : 1;
}
