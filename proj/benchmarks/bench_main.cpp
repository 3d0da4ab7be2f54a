#include <benchmark/benchmark.h>

#include "trajagent/augment.hpp"
#include "trajagent/markov.hpp"
#include "trajagent/metrics.hpp"
#include "trajagent/rng.hpp"
#include "trajagent/synth.hpp"
#include "trajagent/trainer.hpp"

namespace {

using namespace trajagent;

void BM_TopkRate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<Prediction> preds(n);
  std::vector<Id> truths(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (Id c = 0; c < 10; ++c) preds[i].candidates.push_back((c * 7 + i) % 200);
    truths[i] = rng.index(200);
  }
  for (auto _ : state) benchmark::DoNotOptimize(topk_rate(preds, truths, 5));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_TopkRate)->Arg(1000)->Arg(100000);

void BM_Auc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform01();
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(scores, labels));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

const Dataset& benchmark_sessions() {
  static const Dataset ds = sessionize(synthetic_checkin(), kCheckinSessionGap);
  return ds;
}

void BM_ApplyOperator(benchmark::State& state) {
  const int op = static_cast<int>(state.range(0));
  const ParamMap params = resolve_params(op, {});
  for (auto _ : state) benchmark::DoNotOptimize(apply_operator(benchmark_sessions(), op, params, 3));
  state.SetLabel(operator_spec(op).name);
}
BENCHMARK(BM_ApplyOperator)->DenseRange(1, kOperatorCount)->Unit(benchmark::kMillisecond);

void BM_MarkovFit(benchmark::State& state) {
  const DataSplit split = prepare_split(synthetic_checkin());
  auto config = TrainerConfig::parse(builtin_config_text("markov"));
  config.set("order", static_cast<std::int64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fit_markov(split, config));
}
BENCHMARK(BM_MarkovFit)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_MarkovTrainRequest(benchmark::State& state) {
  TrainRequest req;
  req.task = "Next_Location_Prediction";
  req.split = std::make_shared<const DataSplit>(prepare_split(synthetic_checkin()));
  req.config = TrainerConfig::parse(builtin_config_text("markov"));
  const TrainerBinding binding{TrainerBinding::Kind::kNative, "markov"};
  for (auto _ : state) benchmark::DoNotOptimize(handle_train_request(req, binding));
}
BENCHMARK(BM_MarkovTrainRequest)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
