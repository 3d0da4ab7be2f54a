#include <gtest/gtest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "trajagent/subprocess.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/util.hpp"

namespace trajagent {
namespace {

namespace fs = std::filesystem;

ProcessResult cli(const std::string& args, const std::string& cwd = {}) {
  return run_process(std::string(TRAJAGENT_CLI) + " " + args, "", 120.0, cwd);
}

constexpr const char* kQuick = " --thought-steps 1 --max-rounds 2 --max-cycles 1";

TEST(Cli, ListSubcommands) {
  const auto r = cli("list tasks");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("Next_Location_Prediction\tAcc@5"), std::string::npos);
  EXPECT_NE(cli("list models").out.find("LLM_ZS\tllm"), std::string::npos);
  EXPECT_NE(cli("list bogus").exit_code, 0);
}

TEST(Cli, RunReportAndExitCodes) {
  TempDir dir("trajagent-cli");
  const std::string out = " --out " + dir.path();
  const auto ok = cli("run 'predict the next location'" + std::string(kQuick) + out);
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  const std::string exp_dir(trim(split(std::string(trim(ok.out)), '\n').back()));
  const std::string id = fs::path(exp_dir).filename().string();
  const auto rep = cli("report " + id + " --json" + out);
  EXPECT_EQ(rep.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(rep.out)["task"], "Next_Location_Prediction");
  EXPECT_EQ(cli("report " + id + out).out, read_file(exp_dir + "/report.md"));
  EXPECT_EQ(cli("report ffffffffffffffff" + out).exit_code, 4);

  const auto scope = cli("run 'what is the weather'" + out);
  EXPECT_EQ(scope.exit_code, 2);
  EXPECT_NE(scope.err.find("Trajectory_User_Linkage"), std::string::npos);
  EXPECT_EQ(cli("run 'snap GPS points to the road network'" + out).exit_code, 3);
  EXPECT_EQ(cli("run 'predict the next location' --data /nonexistent.csv" + out).exit_code, 4);
}

TEST(Cli, OptimizeExplicit) {
  TempDir dir("trajagent-cli-opt");
  const auto r = cli("optimize --task Next_Location_Prediction --model Markov --mode po" + std::string(kQuick) +
                     " --out " + dir.path());
  EXPECT_EQ(r.exit_code, 0) << r.err;
}

TEST(Cli, IngestThenRunOnDirectory) {
  TempDir dir("trajagent-cli-ingest");
  SyntheticCheckinOptions o;
  o.entities = 12;
  o.sessions_per_entity = 8;
  const std::string raw = dir.path() + "/visits.csv";
  write_records(synthetic_checkin(o), raw);
  const auto ing = cli("ingest --schema checkin_csv --in " + raw + " --out " + dir.path() + "/ds");
  ASSERT_EQ(ing.exit_code, 0) << ing.err;
  EXPECT_NE(ing.out.find("12 entities"), std::string::npos) << ing.out;
  EXPECT_TRUE(fs::exists(dir.path() + "/ds/dataset.json"));
  const auto run = cli("run 'predict the next location' --data " + dir.path() + "/ds" + std::string(kQuick) +
                       " --out " + dir.path() + "/exp");
  EXPECT_EQ(run.exit_code, 0) << run.err;
  EXPECT_EQ(cli("ingest --schema checkin_csv --in " + dir.path() + "/nope.csv --out " + dir.path() + "/x").exit_code,
            4);
}

TEST(Cli, BaselineCsv) {
  const auto r = cli("baseline --searcher random --budget 3 --stage po --with-agent" + std::string(kQuick));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "method,evaluation,score,best");
  EXPECT_NE(r.out.find("\nrandom,3,"), std::string::npos);
  EXPECT_NE(r.out.find("\nagent,"), std::string::npos);
}

TEST(Cli, BaselineJointStage) {
  const auto r = cli("baseline --budget 4 --stage jo --with-agent --max-rounds 2 --max-cycles 1 --thought-steps 1");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("\nrandom,4,"), std::string::npos);
  EXPECT_EQ(r.out.find("\nagent,5,"), std::string::npos);
}

TEST(Cli, ServeTrainer) {
  const auto r = run_process(std::string(TRAJAGENT_CLI) + " serve-trainer", "{}\n", 30.0);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["status"], "error");
}

}  // namespace
}  // namespace trajagent
