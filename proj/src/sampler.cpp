#include "seqrep/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "seqrep/errors.hpp"

namespace seqrep {

TaskSampler::TaskSampler(std::vector<double> probabilities) : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty()) throw UsageError("TaskSampler: at least one task is required");
  double total = 0.0;
  for (double p : probabilities_) {
    if (!std::isfinite(p) || !(p > 0.0)) throw UsageError("TaskSampler: probabilities must be finite and positive");
    total += p;
  }
  for (double& p : probabilities_) p /= total;

  cumulative_.resize(probabilities_.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    running += probabilities_[i];
    cumulative_[i] = running;
  }
  cumulative_.back() = 1.0;
}

TaskSampler TaskSampler::from_counts(std::span<const std::size_t> counts, double exponent) {
  if (counts.empty()) throw UsageError("from_counts: counts must not be empty");
  if (!std::isfinite(exponent)) throw UsageError("from_counts: exponent must be finite");
  std::vector<double> weights;
  weights.reserve(counts.size());
  for (std::size_t n : counts) {
    if (n == 0) throw UsageError("from_counts: every count must be at least 1");
    weights.push_back(std::pow(static_cast<double>(n), exponent));
  }
  TaskSampler sampler(std::move(weights));
  sampler.exponent_ = exponent;
  sampler.counts_.assign(counts.begin(), counts.end());
  return sampler;
}

TaskSampler TaskSampler::from_probabilities(std::vector<double> probabilities) {
  double total = 0.0;
  for (double p : probabilities) total += p;
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("from_probabilities: probabilities must sum to 1");
  return TaskSampler(std::move(probabilities));
}

TaskSampler TaskSampler::uniform(std::size_t tasks) {
  if (tasks == 0) throw UsageError("TaskSampler::uniform: at least one task is required");
  TaskSampler sampler(std::vector<double>(tasks, 1.0));
  sampler.exponent_ = 0.0;
  return sampler;
}

std::size_t TaskSampler::sample(RandomSource& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto index = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(index, cumulative_.size() - 1);
}

}  // namespace seqrep
