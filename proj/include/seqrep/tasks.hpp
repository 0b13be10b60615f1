#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "seqrep/core.hpp"
#include "seqrep/random.hpp"

namespace seqrep {

/// Instance indices into a task's dataset.
struct MiniBatch {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  friend bool operator==(const MiniBatch&, const MiniBatch&) = default;
};

struct Evaluation {
  double loss;
  ParamVector gradient;
};

/// A loss/gradient evaluator over a dataset of `dataset_size()` instances.
///
/// Implementations are immutable and pure: the same (phi, batch) always
/// yields a bit-identical Evaluation. Deterministic tasks have a single
/// instance and accept only the full batch.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string_view family() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t dataset_size() const = 0;
  virtual bool deterministic() const = 0;

  /// True when the Hessian is the identity everywhere (loss = 1/2 |phi - a|^2).
  virtual bool identity_hessian() const { return false; }

  Evaluation evaluate(const ParamVector& phi, const MiniBatch& batch) const;
  Evaluation evaluate_full(const ParamVector& phi) const { return evaluate(phi, full_batch()); }
  double loss_full(const ParamVector& phi) const { return evaluate_full(phi).loss; }

  MiniBatch full_batch() const;

 protected:
  virtual Evaluation do_evaluate(const ParamVector& phi, const MiniBatch& batch) const = 0;
};

using TaskPtr = std::shared_ptr<const Task>;
using TaskSet = std::vector<TaskPtr>;

/// Draws `batch_size` indices uniformly with replacement. Deterministic tasks
/// always get their full batch. batch_size == 0 is a UsageError.
MiniBatch sample_batch(const Task& task, std::size_t batch_size, RandomSource& rng);

/// L(phi) = -A exp(-r |phi - center|), a cone-tipped well with minimum -A at the center.
///
/// The gradient is A r exp(-r d) (phi - center) / d, and the zero vector when
/// d <= 1e-12 where the true loss has a cusp.
class RadialTask final : public Task {
 public:
  static constexpr double kDefaultAmplitude = 200.0;
  static constexpr double kDefaultRate = 0.2;
  static constexpr double kCuspRadius = 1e-12;

  explicit RadialTask(ParamVector center, double amplitude = kDefaultAmplitude, double rate = kDefaultRate);

  std::string_view family() const override { return "radial"; }
  std::size_t dim() const override { return center_.dim(); }
  std::size_t dataset_size() const override { return 1; }
  bool deterministic() const override { return true; }

  const ParamVector& center() const { return center_; }
  double amplitude() const { return amplitude_; }
  double rate() const { return rate_; }

  double loss(const ParamVector& phi) const;
  ParamVector gradient(const ParamVector& phi) const;

 protected:
  Evaluation do_evaluate(const ParamVector& phi, const MiniBatch& batch) const override;

 private:
  ParamVector center_;
  double amplitude_;
  double rate_;
};

/// L(phi) = 1/2 |phi - target|^2.
class QuadraticTask final : public Task {
 public:
  explicit QuadraticTask(ParamVector target);

  std::string_view family() const override { return "quadratic"; }
  std::size_t dim() const override { return target_.dim(); }
  std::size_t dataset_size() const override { return 1; }
  bool deterministic() const override { return true; }
  bool identity_hessian() const override { return true; }

  const ParamVector& target() const { return target_; }

 protected:
  Evaluation do_evaluate(const ParamVector& phi, const MiniBatch& batch) const override;

 private:
  ParamVector target_;
};

/// Linear least squares: loss on a batch is 1/2 mean((w.x - y)^2).
class RegressionTask final : public Task {
 public:
  /// `features` is row-major with `targets.size()` rows of `dim` entries.
  RegressionTask(std::size_t dim, std::vector<double> features, std::vector<double> targets);

  std::string_view family() const override { return "regression"; }
  std::size_t dim() const override { return dim_; }
  std::size_t dataset_size() const override { return targets_.size(); }
  bool deterministic() const override { return false; }

  std::span<const double> row(std::size_t i) const;
  double target(std::size_t i) const { return targets_[i]; }

 protected:
  Evaluation do_evaluate(const ParamVector& phi, const MiniBatch& batch) const override;

 private:
  std::size_t dim_;
  std::vector<double> features_;
  std::vector<double> targets_;
};

/// Parameters of the seeded linear model y = w*.x + noise * N(0, 1), x ~ N(0, I).
struct RegressionSpec {
  std::size_t instances = 100;
  ParamVector true_weights = ParamVector{1.0, -1.0};
  double noise = 0.1;
};

std::shared_ptr<RegressionTask> make_regression_task(const RegressionSpec& spec, RandomSource& rng);

/// The three wells at (0,10), (0,0), (10,0) with A = 200, r = 0.2.
TaskSet synthetic_radial_tasks();

/// Sum of full-batch losses.
double mtl_loss(const TaskSet& tasks, const ParamVector& phi);

/// Throws UsageError if the set is empty or dimensions disagree; returns the shared dim.
std::size_t require_task_set(const TaskSet& tasks);

}  // namespace seqrep
