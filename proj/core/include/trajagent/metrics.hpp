#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trajagent {

enum class MetricDirection { kHigherBetter, kLowerBetter };

std::string_view to_string(MetricDirection d);
MetricDirection parse_direction(std::string_view text);

// Identifiers are dense indices (location or user).
using Id = std::size_t;

struct Prediction {
  std::vector<Id> candidates;  // best first, unique
  std::vector<double> scores;  // optional, parallel to candidates
};

struct MetricValue {
  std::string name;
  double value = 0.0;
  MetricDirection direction = MetricDirection::kHigherBetter;
};

// Fraction of items whose truth is among the first min(k, |candidates|)
// candidates. Acc@k and Hit@k coincide for single-label items.
MetricValue topk_rate(std::span<const Prediction> preds, std::span<const Id> truths, std::size_t k,
                      std::string_view name = {});

MetricValue mae(std::span<const double> preds, std::span<const double> truths);
MetricValue rmse(std::span<const double> preds, std::span<const double> truths);

// Mann-Whitney AUC; ties count one half.
MetricValue auc(std::span<const double> scores, std::span<const int> labels);

// Jensen-Shannon divergence, log base 2, over a shared index set. Inputs are
// renormalized when they do not sum to 1.
MetricValue jsd(std::span<const double> p, std::span<const double> q);

enum class AccuracyMode {
  kPerSequence,  // Acc_m: mean of per-sequence match ratios
  kPooled,       // Acc_i: total matches / total positions
};

MetricValue mean_point_accuracy(const std::vector<std::vector<Id>>& preds,
                                const std::vector<std::vector<Id>>& truths, AccuracyMode mode);

// Metric names understood across the engine: "Acc@k", "Hit@k", "MAE",
// "RMSE", "AUC", "JSD", "Acc_m", "Acc_i".
struct MetricSpec {
  enum class Family { kAccAtK, kHitAtK, kMae, kRmse, kAuc, kJsd, kAccM, kAccI };
  std::string name;
  Family family = Family::kAccAtK;
  std::size_t k = 5;
  MetricDirection direction = MetricDirection::kHigherBetter;
};

std::optional<MetricSpec> parse_metric(std::string_view name);
bool is_known_metric(std::string_view name);

// The optimizer always maximizes; lower-is-better values are negated.
double maximize_normalized(double value, MetricDirection direction);

}  // namespace trajagent
