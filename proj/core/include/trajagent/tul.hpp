#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "trajagent/config.hpp"
#include "trajagent/data.hpp"
#include "trajagent/metrics.hpp"

namespace trajagent {

struct TulOptions {
  bool use_tfidf = false;
  bool sublinear_tf = false;  // 1 + ln(count) instead of the raw count
  std::int64_t min_count = 1;  // profile entries below this are dropped

  // Every field is optional in the config file.
  static TulOptions from_config(const TrainerConfig& config);
};

// Per-user location profiles; users are indexed in ascending id order.
class TulProfileModel {
 public:
  // Throws Error(kTooFewUsers) when train has fewer than two users.
  static TulProfileModel fit(const Dataset& train, const TulOptions& opts);

  // Users by cosine similarity to the trajectory, ties by ascending user id.
  Prediction rank_users(const Trajectory& query, std::size_t k) const;

  std::vector<double> vectorize(const Trajectory& t) const;
  const std::vector<std::string>& users() const { return users_; }
  // Throws Error(kNotFound).
  Id user_index(const std::string& entity) const;
  const std::vector<std::vector<double>>& profiles() const { return profiles_; }

 private:
  std::vector<double> weigh(std::vector<double> counts) const;

  TulOptions opts_;
  Vocabulary vocab_;
  std::vector<std::string> users_;
  std::vector<double> idf_;
  std::vector<std::vector<double>> profiles_;
};

TulProfileModel fit_tul(const DataSplit& split, const TrainerConfig& config);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace trajagent
