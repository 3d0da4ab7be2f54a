#include "trajagent/markov.hpp"

#include <algorithm>

#include "trajagent/error.hpp"

namespace trajagent {

MarkovOptions MarkovOptions::from_config(const TrainerConfig& config) {
  MarkovOptions o;
  const std::int64_t order = config.get_int("order");
  if (order < 1) throw Error(ErrorCode::kValidationError, "order must be >= 1");
  o.order = static_cast<std::size_t>(order);
  o.alpha = config.get_float("alpha");
  if (!(o.alpha >= 0)) throw Error(ErrorCode::kValidationError, "alpha must be >= 0");
  if (config.has("user_weight")) o.user_weight = config.get_float("user_weight");
  if (config.has("skip_weight")) o.skip_weight = config.get_float("skip_weight");
  if (!(o.user_weight >= 0) || !(o.skip_weight >= 0)) {
    throw Error(ErrorCode::kValidationError, "weights must be >= 0");
  }
  return o;
}

std::vector<std::optional<Id>> encode(const Trajectory& t, const Vocabulary& vocab) {
  std::vector<std::optional<Id>> out;
  out.reserve(t.points.size());
  for (const auto& p : t.points) out.push_back(vocab.find(p.loc_id));
  return out;
}

namespace {

// Longest run of known ids ending at each position is what contexts use;
// unknown points break the chain.
std::vector<std::vector<Id>> known_runs(const std::vector<std::optional<Id>>& ids) {
  std::vector<std::vector<Id>> runs(1);
  for (const auto& id : ids) {
    if (id) {
      runs.back().push_back(*id);
    } else if (!runs.back().empty()) {
      runs.emplace_back();
    }
  }
  if (runs.back().empty()) runs.pop_back();
  return runs;
}

void count(std::vector<MarkovModel::Table>& tables, const std::vector<Id>& seq, std::size_t order,
           std::size_t offset) {
  // offset 1: context ends right before the target; 2: one visit is skipped.
  for (std::size_t i = offset; i < seq.size(); ++i) {
    const std::size_t ctx_end = i + 1 - offset;  // exclusive
    for (std::size_t level = 1; level <= order && level <= ctx_end; ++level) {
      MarkovModel::Context ctx(seq.begin() + static_cast<std::ptrdiff_t>(ctx_end - level),
                               seq.begin() + static_cast<std::ptrdiff_t>(ctx_end));
      tables[level - 1][std::move(ctx)][seq[i]] += 1.0;
    }
  }
}

const MarkovModel::Counts* lookup(const MarkovModel::Table& table, std::span<const Id> ctx) {
  const auto it = table.find(MarkovModel::Context(ctx.begin(), ctx.end()));
  return it == table.end() ? nullptr : &it->second;
}

}  // namespace

MarkovModel MarkovModel::fit(const Dataset& train, const MarkovOptions& opts) {
  if (opts.order < 1) throw Error(ErrorCode::kValidationError, "order must be >= 1");
  MarkovModel m;
  m.opts_ = opts;
  m.vocab_size_ = train.vocabulary.size();
  m.mask_ = train.vocabulary.find(kMaskToken);
  m.popularity_.assign(m.vocab_size_, 0.0);
  m.global_.resize(opts.order);
  m.skip_.resize(opts.order);
  for (const auto& t : train.trajectories) {
    auto& user_tables = m.user_[t.entity_id];
    user_tables.resize(opts.order);
    for (const auto& run : known_runs(encode(t, train.vocabulary))) {
      for (Id id : run) m.popularity_[id] += 1.0;
      count(m.global_, run, opts.order, 1);
      count(user_tables, run, opts.order, 1);
      count(m.skip_, run, opts.order, 2);
    }
  }
  return m;
}

MarkovModel::Counts MarkovModel::scores_at(std::span<const Id> history, std::size_t level,
                                           std::optional<std::string_view> entity) const {
  Counts out;
  auto add = [&](const Counts* c, double w) {
    if (!c || w == 0) return;
    for (const auto& [id, n] : *c) out[id] += w * n;
  };
  add(lookup(global_[level - 1], history.last(level)), 1.0);
  if (entity && opts_.user_weight > 0) {
    const auto it = user_.find(std::string(*entity));
    if (it != user_.end()) add(lookup(it->second[level - 1], history.last(level)), opts_.user_weight);
  }
  if (opts_.skip_weight > 0 && history.size() > level) {
    add(lookup(skip_[level - 1], history.first(history.size() - 1).last(level)), opts_.skip_weight);
  }
  if (mask_) out.erase(*mask_);
  return out;
}

std::vector<double> MarkovModel::distribution(std::span<const Id> history,
                                              std::optional<std::string_view> entity,
                                              std::size_t* level_used) const {
  const double v = static_cast<double>(vocab_size_);
  for (std::size_t level = std::min(opts_.order, history.size()); level >= 1; --level) {
    const Counts c = scores_at(history, level, entity);
    double total = 0;
    for (const auto& [id, n] : c) total += n;
    if (total <= 0) continue;
    std::vector<double> p(vocab_size_, opts_.alpha / (total + opts_.alpha * v));
    for (const auto& [id, n] : c) p[id] = (n + opts_.alpha) / (total + opts_.alpha * v);
    if (mask_) p[*mask_] = 0.0;
    if (level_used) *level_used = level;
    return p;
  }
  double total = 0;
  for (std::size_t i = 0; i < vocab_size_; ++i) {
    if (i != mask_) total += popularity_[i];
  }
  std::vector<double> p(vocab_size_, 0.0);
  const double denom = total + opts_.alpha * v;
  for (std::size_t i = 0; i < vocab_size_; ++i) {
    if (i != mask_) p[i] = denom > 0 ? (popularity_[i] + opts_.alpha) / denom : 0.0;
  }
  if (level_used) *level_used = 0;
  return p;
}

Prediction MarkovModel::predict_topk(std::span<const Id> history, std::size_t k,
                                     std::optional<std::string_view> entity) const {
  // Smoothing is monotone in the raw count, so ranking by count with the
  // index tie-break reproduces the ranking of the smoothed distribution.
  std::vector<std::pair<double, Id>> ranked;
  for (std::size_t level = std::min(opts_.order, history.size()); level >= 1 && ranked.empty(); --level) {
    for (const auto& [id, n] : scores_at(history, level, entity)) {
      if (n > 0) ranked.emplace_back(n, id);
    }
  }
  if (ranked.empty()) {
    for (Id i = 0; i < vocab_size_; ++i) {
      if (i != mask_ && popularity_[i] > 0) ranked.emplace_back(popularity_[i], i);
    }
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });

  Prediction pred;
  const std::size_t limit = std::min(k, vocab_size_ - (mask_ ? 1 : 0));
  std::vector<bool> used(vocab_size_, false);
  for (const auto& [n, id] : ranked) {
    if (pred.candidates.size() >= limit) break;
    pred.candidates.push_back(id);
    pred.scores.push_back(n);
    used[id] = true;
  }
  for (Id i = 0; i < vocab_size_ && pred.candidates.size() < limit; ++i) {
    if (used[i] || i == mask_) continue;
    pred.candidates.push_back(i);
    pred.scores.push_back(0.0);
  }
  return pred;
}

MarkovModel fit_markov(const DataSplit& split, const TrainerConfig& config) {
  return MarkovModel::fit(split.train, MarkovOptions::from_config(config));
}

}  // namespace trajagent
