#include "trajagent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

std::string_view to_string(MetricDirection d) {
  return d == MetricDirection::kHigherBetter ? "higher_better" : "lower_better";
}

MetricDirection parse_direction(std::string_view text) {
  if (text == "higher_better") return MetricDirection::kHigherBetter;
  if (text == "lower_better") return MetricDirection::kLowerBetter;
  throw Error(ErrorCode::kValidationError, "unknown metric direction '" + std::string(text) + "'");
}

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(a) + " vs " + std::to_string(b));
  }
  if (a == 0) throw Error(ErrorCode::kEmptyInput, "metric over zero items");
}

}  // namespace

MetricValue topk_rate(std::span<const Prediction> preds, std::span<const Id> truths, std::size_t k,
                      std::string_view name) {
  check_lengths(preds.size(), truths.size());
  if (k == 0) throw Error(ErrorCode::kValidationError, "k must be >= 1");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& c = preds[i].candidates;
    const auto end = c.begin() + static_cast<std::ptrdiff_t>(std::min(k, c.size()));
    if (std::find(c.begin(), end, truths[i]) != end) ++hits;
  }
  MetricValue v;
  v.name = name.empty() ? "Acc@" + std::to_string(k) : std::string(name);
  v.value = static_cast<double>(hits) / static_cast<double>(preds.size());
  return v;
}

MetricValue mae(std::span<const double> preds, std::span<const double> truths) {
  check_lengths(preds.size(), truths.size());
  double sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::abs(preds[i] - truths[i]);
  return {"MAE", sum / static_cast<double>(preds.size()), MetricDirection::kLowerBetter};
}

MetricValue rmse(std::span<const double> preds, std::span<const double> truths) {
  check_lengths(preds.size(), truths.size());
  double sum = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - truths[i];
    sum += d * d;
  }
  return {"RMSE", std::sqrt(sum / static_cast<double>(preds.size())), MetricDirection::kLowerBetter};
}

MetricValue auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; rank-sum of positives gives U.
  double pos_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] != 0) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kOneClassOnly, "AUC needs both classes");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1) / 2.0;
  return {"AUC", u / (np * static_cast<double>(n_neg)), MetricDirection::kHigherBetter};
}

MetricValue jsd(std::span<const double> p, std::span<const double> q) {
  check_lengths(p.size(), q.size());
  double sp = 0, sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || q[i] < 0 || !std::isfinite(p[i]) || !std::isfinite(q[i])) {
      throw Error(ErrorCode::kNegativeMass, "entry " + std::to_string(i) + " is negative or not finite");
    }
    sp += p[i];
    sq += q[i];
  }
  if (sp <= 0 || sq <= 0) throw Error(ErrorCode::kEmptyInput, "distribution with zero total mass");
  double kl_pm = 0, kl_qm = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i] / sp;
    const double qi = q[i] / sq;
    const double mi = 0.5 * (pi + qi);
    if (pi > 0) kl_pm += pi * std::log2(pi / mi);
    if (qi > 0) kl_qm += qi * std::log2(qi / mi);
  }
  const double v = std::clamp(0.5 * (kl_pm + kl_qm), 0.0, 1.0);
  return {"JSD", v, MetricDirection::kLowerBetter};
}

MetricValue mean_point_accuracy(const std::vector<std::vector<Id>>& preds,
                                const std::vector<std::vector<Id>>& truths, AccuracyMode mode) {
  check_lengths(preds.size(), truths.size());
  double per_seq_sum = 0;
  std::size_t matches_total = 0, positions_total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != truths[i].size()) {
      throw Error(ErrorCode::kLengthMismatch, "sequence " + std::to_string(i) + ": " +
                                                  std::to_string(preds[i].size()) + " vs " +
                                                  std::to_string(truths[i].size()));
    }
    std::size_t m = 0;
    for (std::size_t j = 0; j < preds[i].size(); ++j) m += preds[i][j] == truths[i][j];
    matches_total += m;
    positions_total += preds[i].size();
    // An empty sequence pair matches trivially.
    per_seq_sum += preds[i].empty() ? 1.0 : static_cast<double>(m) / static_cast<double>(preds[i].size());
  }
  MetricValue v;
  if (mode == AccuracyMode::kPerSequence) {
    v.name = "Acc_m";
    v.value = per_seq_sum / static_cast<double>(preds.size());
  } else {
    v.name = "Acc_i";
    v.value = positions_total == 0 ? 1.0
                                   : static_cast<double>(matches_total) / static_cast<double>(positions_total);
  }
  return v;
}

std::optional<MetricSpec> parse_metric(std::string_view name) {
  MetricSpec spec;
  spec.name = std::string(name);
  auto at_k = [&](std::string_view prefix, MetricSpec::Family family) -> bool {
    if (name.substr(0, prefix.size()) != prefix) return false;
    auto k = parse_int(name.substr(prefix.size()));
    if (!k || *k < 1) return false;
    spec.family = family;
    spec.k = static_cast<std::size_t>(*k);
    return true;
  };
  if (at_k("Acc@", MetricSpec::Family::kAccAtK) || at_k("Hit@", MetricSpec::Family::kHitAtK)) return spec;
  using F = MetricSpec::Family;
  if (name == "MAE") {
    spec.family = F::kMae;
    spec.direction = MetricDirection::kLowerBetter;
  } else if (name == "RMSE") {
    spec.family = F::kRmse;
    spec.direction = MetricDirection::kLowerBetter;
  } else if (name == "AUC") {
    spec.family = F::kAuc;
  } else if (name == "JSD") {
    spec.family = F::kJsd;
    spec.direction = MetricDirection::kLowerBetter;
  } else if (name == "Acc_m") {
    spec.family = F::kAccM;
  } else if (name == "Acc_i") {
    spec.family = F::kAccI;
  } else {
    return std::nullopt;
  }
  return spec;
}

bool is_known_metric(std::string_view name) { return parse_metric(name).has_value(); }

double maximize_normalized(double value, MetricDirection direction) {
  return direction == MetricDirection::kHigherBetter ? value : -value;
}

}  // namespace trajagent
