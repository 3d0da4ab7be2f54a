#include "trajagent/tul.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trajagent/error.hpp"

namespace trajagent {

TulOptions TulOptions::from_config(const TrainerConfig& config) {
  TulOptions o;
  if (config.has("use_tfidf")) o.use_tfidf = config.get_bool("use_tfidf");
  if (config.has("sublinear_tf")) o.sublinear_tf = config.get_bool("sublinear_tf");
  if (config.has("min_count")) o.min_count = config.get_int("min_count");
  if (o.min_count < 1) throw Error(ErrorCode::kValidationError, "min_count must be >= 1");
  return o;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0 || nb <= 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

TulProfileModel TulProfileModel::fit(const Dataset& train, const TulOptions& opts) {
  TulProfileModel m;
  m.opts_ = opts;
  m.vocab_ = train.vocabulary;
  const std::size_t v = train.vocabulary.size();

  std::map<std::string, std::vector<double>> counts;
  for (const auto& t : train.trajectories) {
    auto& c = counts[t.entity_id];
    c.resize(v, 0.0);
    for (const auto& p : t.points) {
      if (auto id = train.vocabulary.find(p.loc_id)) c[*id] += 1.0;
    }
  }
  if (counts.size() < 2) {
    throw Error(ErrorCode::kTooFewUsers, "train has " + std::to_string(counts.size()) + " user(s), need 2");
  }

  m.idf_.assign(v, 1.0);
  if (opts.use_tfidf) {
    std::vector<double> df(v, 0.0);
    for (const auto& [user, c] : counts) {
      for (std::size_t i = 0; i < v; ++i) df[i] += c[i] > 0 ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(counts.size());
    for (std::size_t i = 0; i < v; ++i) m.idf_[i] = std::log((1.0 + n) / (1.0 + df[i])) + 1.0;
  }

  for (auto& [user, c] : counts) {
    for (auto& x : c) {
      if (x < static_cast<double>(opts.min_count)) x = 0.0;
    }
    m.users_.push_back(user);
    m.profiles_.push_back(m.weigh(std::move(c)));
  }
  return m;
}

std::vector<double> TulProfileModel::weigh(std::vector<double> counts) const {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double x = counts[i];
    if (x > 0 && opts_.sublinear_tf) x = 1.0 + std::log(x);
    counts[i] = x * idf_[i];
  }
  return counts;
}

std::vector<double> TulProfileModel::vectorize(const Trajectory& t) const {
  std::vector<double> c(vocab_.size(), 0.0);
  for (const auto& p : t.points) {
    if (auto id = vocab_.find(p.loc_id)) c[*id] += 1.0;
  }
  return weigh(std::move(c));
}

Id TulProfileModel::user_index(const std::string& entity) const {
  const auto it = std::lower_bound(users_.begin(), users_.end(), entity);
  if (it == users_.end() || *it != entity) throw Error(ErrorCode::kNotFound, "user '" + entity + "'");
  return static_cast<Id>(it - users_.begin());
}

Prediction TulProfileModel::rank_users(const Trajectory& query, std::size_t k) const {
  const auto q = vectorize(query);
  std::vector<std::pair<double, Id>> ranked;
  ranked.reserve(users_.size());
  for (Id u = 0; u < users_.size(); ++u) ranked.emplace_back(cosine(q, profiles_[u]), u);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  Prediction pred;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
    pred.candidates.push_back(ranked[i].second);
    pred.scores.push_back(ranked[i].first);
  }
  return pred;
}

TulProfileModel fit_tul(const DataSplit& split, const TrainerConfig& config) {
  return TulProfileModel::fit(split.train, TulOptions::from_config(config));
}

}  // namespace trajagent
