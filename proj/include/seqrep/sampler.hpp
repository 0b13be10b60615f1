#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqrep/random.hpp"

namespace seqrep {

/// Categorical distribution over task indices 0..T-1 with strictly positive weights.
class TaskSampler {
 public:
  static constexpr double kDefaultExponent = 0.2;

  /// p_t = N_t^q / sum_s N_s^q.
  static TaskSampler from_counts(std::span<const std::size_t> counts, double exponent = kDefaultExponent);

  /// Explicit weights; must be positive and sum to 1 within 1e-9, then renormalized.
  static TaskSampler from_probabilities(std::vector<double> probabilities);

  static TaskSampler uniform(std::size_t tasks);

  std::size_t size() const { return probabilities_.size(); }
  std::span<const double> probabilities() const { return probabilities_; }
  double probability(std::size_t task) const { return probabilities_.at(task); }
  std::optional<double> exponent() const { return exponent_; }
  std::span<const std::size_t> counts() const { return counts_; }

  /// Inverse-CDF draw; consumes exactly one uniform from `rng`.
  std::size_t sample(RandomSource& rng) const;

 private:
  explicit TaskSampler(std::vector<double> probabilities);

  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  std::optional<double> exponent_;
  std::vector<std::size_t> counts_;
};

}  // namespace seqrep
