#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "seqrep/core.hpp"
#include "seqrep/optim.hpp"
#include "seqrep/sampler.hpp"
#include "seqrep/tasks.hpp"

namespace seqrep {

/// Largest T^K the exact enumeration will accept.
inline constexpr std::uint64_t kEnumerationLimit = 65536;

enum class EstimateMethod { ExactEnumeration, MonteCarlo };

struct ExpectationEstimate {
  ParamVector value;
  EstimateMethod method;
  std::uint64_t count;                       ///< sequences enumerated or samples drawn
  std::optional<ParamVector> standard_error; ///< Monte Carlo only
  double weight_sum = 1.0;                   ///< exact enumeration: sum of sequence probabilities
};

/// E[MG(phi)] over t_1..t_K ~ Cat(p), summing P(sequence) * MG(sequence) over
/// all T^K sequences in lexicographic order. Tasks must be deterministic.
ExpectationEstimate expected_meta_gradient_exact(const ParamVector& phi, const TaskSet& tasks,
                                                 const TaskSampler& sampler, const RunConfig& cfg);

/// Sample mean of MG over `samples` Sequential Reptile trajectories; sample i
/// uses rng.child(i), and the reduction runs in sample order.
ExpectationEstimate expected_meta_gradient_mc(const ParamVector& phi, const TaskSet& tasks,
                                              const TaskSampler& sampler, const RunConfig& cfg,
                                              std::size_t samples, const RandomSource& rng);

struct SequenceEntry {
  std::size_t task;
  MiniBatch batch;
};

struct SurrogateEval {
  double surrogate_loss;
  ParamVector surrogate_gradient;
};

/// sum_k L(phi; B_k) - alpha/2 sum_{j<k} <g_k(phi), g_j(phi)>, every gradient at phi.
double surrogate_loss(const ParamVector& phi, const TaskSet& tasks, std::span<const SequenceEntry> sequence,
                      double alpha);

/// Surrogate value and gradient. Identity-Hessian tasks use the closed form
/// sum_k g_k - alpha/2 sum_{j<k} (g_k + g_j); anything else uses central
/// differences with step 1e-6 * max(1, |phi_i|).
SurrogateEval surrogate_objective(const ParamVector& phi, const TaskSet& tasks,
                                  std::span<const SequenceEntry> sequence, double alpha);

struct TaylorRow {
  double alpha;
  double residual;  ///< |E_exact[MG] - alpha * grad E[surrogate]|
};

struct TaylorTable {
  std::vector<TaylorRow> rows;
  std::vector<double> ratios;  ///< residual(alpha_i) / residual(alpha_{i+1})
};

TaylorTable taylor_order_check(const ParamVector& phi, const TaskSet& tasks, const TaskSampler& sampler,
                               std::size_t inner_steps, std::span<const double> alphas);

struct GradientAlignmentReport {
  std::size_t tasks;
  std::vector<double> matrix;  ///< row-major T x T cosine similarities
  double mean_offdiagonal;     ///< NaN when T == 1 (no pairs)

  double at(std::size_t i, std::size_t j) const { return matrix[i * tasks + j]; }
};

/// Pairwise cosine similarity of the full-batch task gradients at phi.
/// A zero task gradient raises ZeroGradientError naming the task.
GradientAlignmentReport alignment_report(const ParamVector& phi, const TaskSet& tasks);

struct Bounds2D {
  double x_min, x_max, y_min, y_max;
};

struct LossGrid {
  Bounds2D bounds;
  std::size_t nx, ny;
  std::vector<double> values;  ///< row-major: values[iy * nx + ix]

  double x(std::size_t ix) const;
  double y(std::size_t iy) const;
  double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
};

/// MTL loss over an nx x ny lattice spanning `bounds` inclusive of the edges.
LossGrid loss_grid(const TaskSet& tasks, const Bounds2D& bounds, std::size_t nx, std::size_t ny);

/// Central differences of `f` at `phi`, step h * max(1, |phi_i|).
ParamVector finite_difference_gradient(const std::function<double(const ParamVector&)>& f, const ParamVector& phi,
                                       double h = 1e-6);

/// |analytic - finite difference| / max(|analytic|, |finite difference|, floor).
double relative_gradient_error(const Task& task, const ParamVector& phi, const MiniBatch& batch, double h = 1e-6);

}  // namespace seqrep
