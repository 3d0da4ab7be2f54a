#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trajagent/data.hpp"
#include "trajagent/error.hpp"
#include "trajagent/llm.hpp"
#include "trajagent/optim.hpp"
#include "trajagent/registry.hpp"
#include "trajagent/store.hpp"
#include "trajagent/trainer.hpp"
#include "trajagent/util.hpp"
#include "trajagent/workflow.hpp"

namespace fs = std::filesystem;
using namespace trajagent;

namespace {

struct RunFlags {
  std::string data;
  std::string backend = "stub";
  std::uint64_t seed = 0;
  std::size_t memory_size = kDefaultMemoryWindow;
  int thought_steps = 10;
  int max_rounds = 20;
  int max_cycles = 2;
  std::string out = "experiments";
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--data", f.data, "Registered dataset name, CSV file or ingest directory");
  cmd->add_option("--backend", f.backend, "Chat backend")->check(CLI::IsMember({"stub", "http"}));
  cmd->add_option("--seed", f.seed, "Seed for augmentation and training");
  cmd->add_option("--memory-size", f.memory_size, "Short-term memory window")->check(CLI::PositiveNumber);
  cmd->add_option("--thought-steps", f.thought_steps, "Think turns per round")->check(CLI::PositiveNumber);
  cmd->add_option("--max-rounds", f.max_rounds, "Rounds per stage loop")->check(CLI::PositiveNumber);
  cmd->add_option("--max-cycles", f.max_cycles, "Joint optimization cycles")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Experiment store directory");
}

WorkflowOptions workflow_options(const RunFlags& f) {
  WorkflowOptions o;
  o.data = f.data;
  o.out_dir = f.out;
  o.settings.seed = f.seed;
  o.settings.memory_size = f.memory_size;
  o.settings.thought_steps = f.thought_steps;
  o.settings.criteria.max_rounds = f.max_rounds;
  o.settings.criteria.max_cycles = f.max_cycles;
  return o;
}

Registry load_registry(const std::string& dir) { return dir.empty() ? default_registry() : Registry::load(dir); }

int report_outcome(const RunOutcome& out) {
  if (out.exit_code == kExitOk) {
    std::cout << out.message << "\n" << out.experiment_dir << "\n";
  } else {
    std::cerr << "error: " << out.message << "\n";
  }
  return out.exit_code;
}

int cmd_ingest(const std::string& schema, const std::string& in, const std::string& out_dir) {
  const LoadResult loaded = load_records(in, parse_schema(schema));
  const Dataset cleaned = clean(loaded.dataset);
  fs::create_directories(out_dir);
  const fs::path records = fs::path(out_dir) / "records.csv";
  write_records(cleaned, records.string(), true);
  DatasetDescriptor desc;
  desc.name = fs::path(in).stem().string();
  desc.kind = cleaned.kind;
  desc.stats_summary = stats(cleaned).summary();
  desc.source = fs::absolute(in).string();
  desc.path = "records.csv";
  write_file_atomic((fs::path(out_dir) / "dataset.json").string(), to_json(desc).dump(2) + "\n");
  std::cout << desc.name << ": " << desc.stats_summary << "\n";
  std::cout << "dropped rows: " << loaded.dropped_rows << "\n";
  for (std::size_t i = 0; i < loaded.issues.size() && i < 20; ++i) {
    std::cout << "  line " << loaded.issues[i].line_no << ": " << loaded.issues[i].reason << "\n";
  }
  return kExitOk;
}

int cmd_list(const Registry& registry, const std::string& what) {
  if (what == "tasks") {
    for (const auto& t : registry.tasks()) std::cout << t.name << "\t" << t.metric << "\t" << t.description << "\n";
  } else if (what == "models") {
    for (const auto& m : registry.models()) {
      std::cout << m.name << "\t" << to_string(m.binding.kind) << "\t" << join(m.tasks, ",") << "\n";
    }
  } else {
    for (const auto& d : registry.datasets()) {
      std::cout << d.name << "\t" << to_string(d.kind) << "\t" << d.stats_summary << "\n";
    }
  }
  return kExitOk;
}

struct BaselineFlags {
  std::string searcher = "random";
  std::size_t budget = 20;
  std::string task = "Next_Location_Prediction";
  std::string model = "Markov";
  std::string stage = "po";
  bool with_agent = false;
  std::string csv;
};

int cmd_baseline(Registry registry, const RunFlags& f, const BaselineFlags& b) {
  WorkflowOptions opts = workflow_options(f);
  auto llm = std::make_shared<LlmClient>(make_client(f.backend));
  opts.data = resolve_data(registry, f.data.empty() ? std::string("Synthetic_Checkin") : f.data);
  Pipeline pipeline(registry, *llm, opts);
  const auto task = registry.find_task(b.task);
  const auto model = registry.find_model(b.model);
  if (!task || !model) throw Error(ErrorCode::kNotFound, "unknown task or model");
  OptimTarget target{*task, *model, pipeline.split_for(opts.data), load_model_config(*model)};
  const bool joint = b.stage == "jo";
  const Stage stage = b.stage == "da" ? Stage::kDA : Stage::kPO;

  std::vector<std::pair<std::string, std::vector<ExperimentRecord>>> runs;
  Evaluator evaluator(target, opts.settings);
  if (b.searcher == "random") {
    runs.emplace_back("random", joint ? random_joint_search(evaluator, b.budget, f.seed).records
                                      : random_search(evaluator, stage, b.budget, f.seed).records);
  } else {
    runs.emplace_back("grid", grid_search(evaluator, target.base_config.search_space()).records);
  }
  if (b.with_agent) {
    OptimSettings s = opts.settings;
    if (!joint) {
      // Curve over the full budget: patience is lifted so the loop does not stop early.
      s.criteria.max_rounds = static_cast<int>(b.budget);
      s.criteria.patience = static_cast<int>(b.budget);
    }
    MemoryStore memory(s.memory_size);
    Optimizer agent(target, *llm, memory, s);
    if (joint) {
      agent.run_joint();
    } else {
      agent.run_stage_loop(stage);
    }
    std::vector<ExperimentRecord> records = memory.long_term();
    if (records.size() > b.budget + 1) records.resize(b.budget + 1);
    runs.emplace_back("agent", std::move(records));
  }
  const std::string csv = curve_csv(runs);
  if (b.csv.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(b.csv, csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated trajectory modeling: task understanding, planning and agentic optimization"};
  app.require_subcommand(1);
  std::string registry_dir;
  app.add_option("--registry", registry_dir, "Registry directory (defaults to the built-in catalogue)");

  RunFlags run_flags;
  std::string query;
  auto* run = app.add_subcommand("run", "Run the full pipeline from a natural-language query");
  run->add_option("query", query, "Task request")->required();
  add_run_flags(run, run_flags);

  RunFlags opt_flags;
  std::string opt_task, opt_model, opt_mode = "jo";
  auto* optimize = app.add_subcommand("optimize", "Optimize an explicit task/model/data triple");
  optimize->add_option("--task", opt_task)->required();
  optimize->add_option("--model", opt_model)->required();
  optimize->add_option("--mode", opt_mode)->check(CLI::IsMember({"da", "po", "pro", "jo"}));
  add_run_flags(optimize, opt_flags);

  std::string schema, ingest_in, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "Load, validate and clean a CSV of trajectory records");
  ingest->add_option("--schema", schema)->required()->check(CLI::IsMember({"checkin_csv", "gps_csv"}));
  ingest->add_option("--in", ingest_in)->required();
  ingest->add_option("--out", ingest_out)->required();

  std::string report_id, report_root = "experiments";
  bool report_json = false;
  auto* report = app.add_subcommand("report", "Print the report of an experiment");
  report->add_option("experiment-id", report_id)->required();
  report->add_option("--out", report_root, "Experiment store directory");
  report->add_flag("--json", report_json, "Print report.json instead of report.md");

  std::string list_what;
  auto* list = app.add_subcommand("list", "List registered tasks, models or datasets");
  list->add_option("what", list_what)->required()->check(CLI::IsMember({"tasks", "models", "datasets"}));

  RunFlags base_flags;
  BaselineFlags base;
  auto* baseline = app.add_subcommand("baseline", "Random or grid search curves as CSV");
  baseline->add_option("--searcher", base.searcher)->check(CLI::IsMember({"random", "grid"}));
  baseline->add_option("--budget", base.budget)->check(CLI::PositiveNumber);
  baseline->add_option("--task", base.task);
  baseline->add_option("--model", base.model);
  baseline->add_option("--stage", base.stage)->check(CLI::IsMember({"da", "po", "jo"}));
  baseline->add_flag("--with-agent", base.with_agent, "Add the agent's curve over the same budget");
  baseline->add_option("--csv", base.csv, "Write the CSV to a file instead of stdout");
  add_run_flags(baseline, base_flags);

  std::string serve_target = "markov";
  auto* serve = app.add_subcommand("serve-trainer", "Answer one trainer protocol request on stdin");
  serve->add_option("--target", serve_target)->check(CLI::IsMember({"markov", "tul"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      LlmClient llm = make_client(run_flags.backend);
      Pipeline pipeline(load_registry(registry_dir), llm, workflow_options(run_flags));
      const RunOutcome out = pipeline.run(query);
      if (out.exit_code == kExitOutOfScope) {
        std::cerr << "error: " << out.message << "\n";
        return out.exit_code;
      }
      return report_outcome(out);
    }
    if (*optimize) {
      LlmClient llm = make_client(opt_flags.backend);
      Pipeline pipeline(load_registry(registry_dir), llm, workflow_options(opt_flags));
      std::string mode = opt_mode;
      for (auto& c : mode) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return report_outcome(pipeline.optimize(opt_task, opt_model, {mode}));
    }
    if (*ingest) return cmd_ingest(schema, ingest_in, ingest_out);
    if (*report) {
      ExperimentStore store(report_root);
      if (report_json) {
        std::cout << store.read_report_json(report_id).dump(2) << "\n";
      } else {
        std::cout << store.read_report_markdown(report_id);
      }
      return kExitOk;
    }
    if (*list) return cmd_list(load_registry(registry_dir), list_what);
    if (*baseline) return cmd_baseline(load_registry(registry_dir), base_flags, base);
    if (*serve) return serve_trainer(std::cin, std::cout, serve_target);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool io = e.code() == ErrorCode::kIo || e.code() == ErrorCode::kNotFound ||
                    e.code() == ErrorCode::kMissingColumn || e.code() == ErrorCode::kEmptyDataset;
    return io ? kExitIo : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
