#include "seqrep/tasks.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace seqrep {

Evaluation Task::evaluate(const ParamVector& phi, const MiniBatch& batch) const {
  if (phi.dim() != dim()) {
    throw UsageError("evaluate: parameter dimension " + std::to_string(phi.dim()) + " does not match task dimension " +
                     std::to_string(dim()));
  }
  if (batch.indices.empty()) throw UsageError("evaluate: empty mini-batch");
  if (deterministic()) {
    if (batch != full_batch()) throw UsageError("evaluate: deterministic task accepts only its full batch");
  } else {
    for (std::size_t idx : batch.indices) {
      if (idx >= dataset_size()) throw UsageError("evaluate: batch index out of range");
    }
  }
  return do_evaluate(phi, batch);
}

MiniBatch Task::full_batch() const {
  MiniBatch batch;
  batch.indices.resize(dataset_size());
  std::iota(batch.indices.begin(), batch.indices.end(), std::size_t{0});
  return batch;
}

MiniBatch sample_batch(const Task& task, std::size_t batch_size, RandomSource& rng) {
  if (batch_size == 0) throw UsageError("sample_batch: batch_size must be positive");
  if (task.deterministic()) return task.full_batch();
  MiniBatch batch;
  batch.indices.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.indices.push_back(static_cast<std::size_t>(rng.uniform_index(task.dataset_size())));
  }
  return batch;
}

// ---------------------------------------------------------------------------

RadialTask::RadialTask(ParamVector center, double amplitude, double rate)
    : center_(std::move(center)), amplitude_(amplitude), rate_(rate) {
  if (!(amplitude_ > 0.0) || !(rate_ > 0.0)) throw UsageError("RadialTask: amplitude and rate must be positive");
}

double RadialTask::loss(const ParamVector& phi) const {
  return -amplitude_ * std::exp(-rate_ * l2_distance(phi, center_));
}

ParamVector RadialTask::gradient(const ParamVector& phi) const {
  ParamVector offset = phi - center_;
  const double d = norm(offset);
  if (d <= kCuspRadius) return ParamVector::zeros(phi.dim());
  offset *= amplitude_ * rate_ * std::exp(-rate_ * d) / d;
  return offset;
}

Evaluation RadialTask::do_evaluate(const ParamVector& phi, const MiniBatch&) const {
  return {loss(phi), gradient(phi)};
}

// ---------------------------------------------------------------------------

QuadraticTask::QuadraticTask(ParamVector target) : target_(std::move(target)) {}

Evaluation QuadraticTask::do_evaluate(const ParamVector& phi, const MiniBatch&) const {
  ParamVector g = phi - target_;
  return {0.5 * dot(g, g), std::move(g)};
}

// ---------------------------------------------------------------------------

RegressionTask::RegressionTask(std::size_t dim, std::vector<double> features, std::vector<double> targets)
    : dim_(dim), features_(std::move(features)), targets_(std::move(targets)) {
  if (dim_ == 0 || targets_.empty()) throw UsageError("RegressionTask: need dim >= 1 and at least one instance");
  if (features_.size() != dim_ * targets_.size()) {
    throw UsageError("RegressionTask: feature matrix has the wrong number of entries");
  }
}

std::span<const double> RegressionTask::row(std::size_t i) const {
  return std::span<const double>(features_).subspan(i * dim_, dim_);
}

Evaluation RegressionTask::do_evaluate(const ParamVector& phi, const MiniBatch& batch) const {
  double loss = 0.0;
  ParamVector grad = ParamVector::zeros(dim_);
  for (std::size_t idx : batch.indices) {
    const auto x = row(idx);
    double residual = -targets_[idx];
    for (std::size_t j = 0; j < dim_; ++j) residual += phi[j] * x[j];
    loss += 0.5 * residual * residual;
    for (std::size_t j = 0; j < dim_; ++j) grad[j] += residual * x[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  grad *= inv;
  return {loss * inv, std::move(grad)};
}

std::shared_ptr<RegressionTask> make_regression_task(const RegressionSpec& spec, RandomSource& rng) {
  if (spec.instances == 0) throw UsageError("make_regression_task: instances must be positive");
  if (!(spec.noise >= 0.0)) throw UsageError("make_regression_task: noise must be non-negative");
  const std::size_t dim = spec.true_weights.dim();
  std::vector<double> features(spec.instances * dim);
  std::vector<double> targets(spec.instances);
  for (std::size_t i = 0; i < spec.instances; ++i) {
    double y = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double x = rng.normal();
      features[i * dim + j] = x;
      y += spec.true_weights[j] * x;
    }
    targets[i] = y + spec.noise * rng.normal();
  }
  return std::make_shared<RegressionTask>(dim, std::move(features), std::move(targets));
}

TaskSet synthetic_radial_tasks() {
  return {
      std::make_shared<RadialTask>(ParamVector{0.0, 10.0}),
      std::make_shared<RadialTask>(ParamVector{0.0, 0.0}),
      std::make_shared<RadialTask>(ParamVector{10.0, 0.0}),
  };
}

double mtl_loss(const TaskSet& tasks, const ParamVector& phi) {
  double total = 0.0;
  for (const auto& task : tasks) total += task->loss_full(phi);
  return total;
}

std::size_t require_task_set(const TaskSet& tasks) {
  if (tasks.empty()) throw UsageError("task set must not be empty");
  for (const auto& task : tasks) {
    if (!task) throw UsageError("task set contains a null task");
  }
  const std::size_t dim = tasks.front()->dim();
  for (const auto& task : tasks) {
    if (task->dim() != dim) throw UsageError("task set mixes parameter dimensions");
  }
  return dim;
}

}  // namespace seqrep
