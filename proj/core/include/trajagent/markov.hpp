#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajagent/config.hpp"
#include "trajagent/data.hpp"
#include "trajagent/metrics.hpp"

namespace trajagent {

struct MarkovOptions {
  std::size_t order = 1;
  double alpha = 1.0;
  // Weight of the entity's own transition counts added to the global ones.
  double user_weight = 0.0;
  // Weight of one-step-skip transitions (x[i-2] -> x[i]) added to the scores.
  double skip_weight = 0.0;

  // Reads order/alpha (required) and user_weight/skip_weight (optional).
  // Throws Error(kConfigMissing) or Error(kValidationError).
  static MarkovOptions from_config(const TrainerConfig& config);
};

// Variable-order transition model over vocabulary indices.
class MarkovModel {
 public:
  using Context = std::vector<Id>;
  using Counts = std::map<Id, double>;
  using Table = std::map<Context, Counts>;

  static MarkovModel fit(const Dataset& train, const MarkovOptions& opts);

  // Ranked by (count + alpha) / (total + alpha * V) at the longest context
  // with mass, ties by ascending index; popularity when no context has mass.
  // The mask token is never proposed.
  Prediction predict_topk(std::span<const Id> history, std::size_t k,
                          std::optional<std::string_view> entity = std::nullopt) const;

  // Smoothed distribution over the whole vocabulary at the level used by
  // predict_topk, plus that level (0 = popularity).
  std::vector<double> distribution(std::span<const Id> history,
                                   std::optional<std::string_view> entity = std::nullopt,
                                   std::size_t* level_used = nullptr) const;

  const MarkovOptions& options() const { return opts_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const std::vector<double>& popularity() const { return popularity_; }
  // Global counts for contexts of length `level` (1..order).
  const Table& table(std::size_t level) const { return global_.at(level - 1); }

  friend bool operator==(const MarkovModel&, const MarkovModel&) = default;

 private:
  Counts scores_at(std::span<const Id> history, std::size_t level,
                   std::optional<std::string_view> entity) const;

  MarkovOptions opts_;
  std::size_t vocab_size_ = 0;
  std::optional<Id> mask_;
  std::vector<double> popularity_;
  std::vector<Table> global_;                       // per level
  std::vector<Table> skip_;                         // per level
  std::map<std::string, std::vector<Table>> user_;  // per entity, per level
};

inline bool operator==(const MarkovOptions& a, const MarkovOptions& b) {
  return a.order == b.order && a.alpha == b.alpha && a.user_weight == b.user_weight &&
         a.skip_weight == b.skip_weight;
}

MarkovModel fit_markov(const DataSplit& split, const TrainerConfig& config);

// Location-index sequence of a trajectory under `vocab`; points whose id is
// unknown map to nullopt.
std::vector<std::optional<Id>> encode(const Trajectory& t, const Vocabulary& vocab);

}  // namespace trajagent
