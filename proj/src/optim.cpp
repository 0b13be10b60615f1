#include "seqrep/optim.hpp"

#include <cmath>
#include <numeric>
#include <utility>

namespace seqrep {
namespace {

constexpr std::string_view kKindNames[] = {"mtl", "reptile", "seq-reptile", "pcgrad"};

void require_finite(const Evaluation& eval, std::size_t step, std::size_t task) {
  if (!std::isfinite(eval.loss) || !eval.gradient.all_finite()) {
    throw DivergenceError("non-finite loss or gradient at step " + std::to_string(step) + " on task " +
                              std::to_string(task + 1),
                          step, task);
  }
}

void require_finite(const ParamVector& phi, std::size_t step) {
  if (!phi.all_finite()) {
    throw DivergenceError("non-finite parameters after step " + std::to_string(step), step);
  }
}

void require_compatible(const ParamVector& phi, const TaskSet& tasks) {
  const std::size_t dim = require_task_set(tasks);
  if (phi.dim() != dim) throw UsageError("parameter dimension does not match the task set");
}

/// Shared SGD recursion; `pick(k)` names the task id for step k (1-based)
/// and `task_of(t)` resolves it.
template <typename PickTask, typename TaskOf>
InnerTrajectory run_trajectory(const ParamVector& phi, const RunConfig& cfg, RandomSource& batch_rng,
                               PickTask&& pick, TaskOf&& task_of) {
  InnerTrajectory traj;
  traj.iterates.reserve(cfg.inner_steps + 1);
  traj.iterates.push_back(phi);
  for (std::size_t k = 1; k <= cfg.inner_steps; ++k) {
    const std::size_t t = pick(k);
    const Task& task = task_of(t);
    MiniBatch batch = sample_batch(task, cfg.batch_size, batch_rng);
    Evaluation eval = task.evaluate(traj.iterates.back(), batch);
    require_finite(eval, k, t);
    ParamVector next = traj.iterates.back();
    next.axpy(-cfg.inner_lr, eval.gradient);
    require_finite(next, k);
    traj.iterates.push_back(std::move(next));
    traj.task_ids.push_back(t);
    traj.step_gradients.push_back(std::move(eval.gradient));
    traj.batches.push_back(std::move(batch));
    traj.step_losses.push_back(eval.loss);
  }
  return traj;
}

std::vector<ParamVector> task_gradients(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                                        const RandomSource& rng) {
  std::vector<ParamVector> grads;
  grads.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    RandomSource batch_rng = rng.child(t);
    const MiniBatch batch = sample_batch(*tasks[t], cfg.batch_size, batch_rng);
    Evaluation eval = tasks[t]->evaluate(phi, batch);
    require_finite(eval, 1, t);
    grads.push_back(std::move(eval.gradient));
  }
  return grads;
}

void shuffle(std::vector<std::size_t>& items, RandomSource& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(items[i - 1], items[j]);
  }
}

StepRecord snapshot(std::size_t step, const ParamVector& phi, const TaskSet& tasks, std::uint64_t evaluations,
                    const TrainOptions& options) {
  StepRecord rec{step, phi, 0.0, {}, {}, evaluations};
  rec.task_losses.reserve(tasks.size());
  for (const auto& task : tasks) {
    Evaluation eval = task->evaluate_full(phi);
    rec.task_losses.push_back(eval.loss);
    rec.mtl_loss += eval.loss;
    if (options.record_gradients) rec.task_gradients.push_back(std::move(eval.gradient));
  }
  return rec;
}

}  // namespace

std::string_view to_string(OptimizerKind kind) { return kKindNames[static_cast<int>(kind)]; }

OptimizerKind parse_optimizer_kind(std::string_view name) {
  for (int i = 0; i < 4; ++i) {
    if (kKindNames[i] == name) return static_cast<OptimizerKind>(i);
  }
  throw UsageError("unknown optimizer kind '" + std::string(name) + "' (expected mtl, reptile, seq-reptile or pcgrad)");
}

std::vector<std::string> RunConfig::validate() const {
  if (!std::isfinite(inner_lr) || inner_lr < 0.0) throw UsageError("inner_lr must be finite and non-negative");
  if (!std::isfinite(outer_lr) || outer_lr < 0.0) throw UsageError("outer_lr must be finite and non-negative");
  if (inner_steps < 1) throw UsageError("inner_steps must be at least 1");
  if (outer_steps < 1) throw UsageError("outer_steps must be at least 1");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (!std::isfinite(l2_coeff) || l2_coeff < 0.0) throw UsageError("l2_coeff must be finite and non-negative");
  if (l2_coeff > 0.0 && !l2_reference) throw UsageError("l2_coeff > 0 requires l2_reference");
  std::vector<std::string> warnings;
  if (outer_lr > 1.0) warnings.push_back("outer_lr > 1 extrapolates beyond the inner trajectory endpoint");
  return warnings;
}

MetaGradient MetaGradient::of(const InnerTrajectory& trajectory) {
  return {trajectory.start() - trajectory.end()};
}

InnerTrajectory inner_loop_single_task(const ParamVector& phi, const Task& task, std::size_t task_id,
                                       const RunConfig& cfg, RandomSource& rng) {
  if (phi.dim() != task.dim()) throw UsageError("inner_loop_single_task: dimension mismatch");
  return run_trajectory(
      phi, cfg, rng, [&](std::size_t) { return task_id; }, [&](std::size_t) -> const Task& { return task; });
}

InnerTrajectory inner_loop_scheduled(const ParamVector& phi, const TaskSet& tasks,
                                     std::span<const std::size_t> schedule, const RunConfig& cfg,
                                     RandomSource& batch_rng) {
  require_compatible(phi, tasks);
  if (schedule.size() != cfg.inner_steps) throw UsageError("inner_loop_scheduled: schedule length must equal K");
  for (std::size_t t : schedule) {
    if (t >= tasks.size()) throw UsageError("inner_loop_scheduled: task index out of range");
  }
  return run_trajectory(
      phi, cfg, batch_rng, [&](std::size_t k) { return schedule[k - 1]; },
      [&](std::size_t t) -> const Task& { return *tasks[t]; });
}

InnerTrajectory sequential_inner_loop(const ParamVector& phi, const TaskSet& tasks, const TaskSampler& sampler,
                                      const RunConfig& cfg, const RandomSource& rng) {
  require_compatible(phi, tasks);
  if (sampler.size() != tasks.size()) throw UsageError("sampler does not cover the task set");
  RandomSource choice_rng = rng.child(streams::kTaskChoice);
  RandomSource batch_rng = rng.child(0);
  return run_trajectory(
      phi, cfg, batch_rng, [&](std::size_t) { return sampler.sample(choice_rng); },
      [&](std::size_t t) -> const Task& { return *tasks[t]; });
}

ParamVector interpolate_outer(const ParamVector& phi, const ParamVector& endpoint, double eta) {
  if (eta == 1.0) return endpoint;
  ParamVector out = phi;
  out.axpy(-eta, phi - endpoint);
  return out;
}

ReptileStep reptile_meta_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                              const RandomSource& rng) {
  require_compatible(phi, tasks);
  ReptileStep result{phi, {}};
  result.trajectories.reserve(tasks.size());
  ParamVector mg_mean = ParamVector::zeros(phi.dim());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    RandomSource task_rng = rng.child(t);
    result.trajectories.push_back(inner_loop_single_task(phi, *tasks[t], t, cfg, task_rng));
    mg_mean += MetaGradient::of(result.trajectories.back()).direction;
  }
  if (tasks.size() == 1) {
    result.phi = interpolate_outer(phi, result.trajectories.front().end(), cfg.outer_lr);
    return result;
  }
  mg_mean *= 1.0 / static_cast<double>(tasks.size());
  result.phi.axpy(-cfg.outer_lr, mg_mean);
  return result;
}

SequentialStep sequential_reptile_meta_step(const ParamVector& phi, const TaskSet& tasks,
                                            const TaskSampler& sampler, const RunConfig& cfg,
                                            const RandomSource& rng) {
  InnerTrajectory traj = sequential_inner_loop(phi, tasks, sampler, cfg, rng);
  ParamVector next = interpolate_outer(phi, traj.end(), cfg.outer_lr);
  return {std::move(next), std::move(traj)};
}

ParamVector joint_mtl_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                           const RandomSource& rng) {
  require_compatible(phi, tasks);
  ParamVector direction = ParamVector::zeros(phi.dim());
  for (const ParamVector& g : task_gradients(phi, tasks, cfg, rng)) direction += g;
  if (cfg.l2_coeff > 0.0) {
    if (!cfg.l2_reference) throw UsageError("l2_coeff > 0 requires l2_reference");
    direction.axpy(cfg.l2_coeff, phi - *cfg.l2_reference);
  }
  ParamVector next = phi;
  next.axpy(-cfg.inner_lr, direction);
  return next;
}

std::size_t SurgeryReport::projections() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.skipped_zero_norm ? 0 : 1;
  return n;
}

ProjectedGradients project_conflicting(std::span<const ParamVector> gradients, RandomSource& rng) {
  ProjectedGradients out{{gradients.begin(), gradients.end()}, {}};
  const std::size_t count = gradients.size();
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<std::size_t> order;
    order.reserve(count - 1);
    for (std::size_t j = 0; j < count; ++j) {
      if (j != i) order.push_back(j);
    }
    shuffle(order, rng);
    ParamVector& gi = out.gradients[i];
    for (std::size_t j : order) {
      const ParamVector& gj = gradients[j];
      const double gj_sq = dot(gj, gj);
      const double d = dot(gi, gj);
      if (gj_sq == 0.0) {
        out.report.entries.push_back({i, j, d, true});
        continue;
      }
      if (d < 0.0) {
        gi.axpy(-d / gj_sq, gj);
        out.report.entries.push_back({i, j, d, false});
      }
    }
  }
  return out;
}

PcGradStep pcgrad_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg, const RandomSource& rng) {
  require_compatible(phi, tasks);
  if (tasks.size() < 2) throw UsageError("pcgrad_step: needs at least two tasks");
  const std::vector<ParamVector> grads = task_gradients(phi, tasks, cfg, rng);
  RandomSource perm_rng = rng.child(streams::kPermutation);
  ProjectedGradients projected = project_conflicting(grads, perm_rng);
  ParamVector direction = ParamVector::zeros(phi.dim());
  for (const ParamVector& g : projected.gradients) direction += g;
  ParamVector next = phi;
  next.axpy(-cfg.inner_lr, direction);
  return {std::move(next), std::move(projected.report)};
}

TrainingDiverged::TrainingDiverged(const DivergenceError& cause, std::size_t outer_step, TrainRecord partial)
    : DivergenceError("outer step " + std::to_string(outer_step) + ": " + cause.what(), cause.step(), cause.task()),
      outer_step_(outer_step),
      partial_(std::move(partial)) {}

std::uint64_t gradient_evaluations_per_step(OptimizerKind kind, std::size_t tasks, const RunConfig& cfg) {
  switch (kind) {
    case OptimizerKind::Mtl:
    case OptimizerKind::PcGrad:
      return tasks;
    case OptimizerKind::Reptile:
      return static_cast<std::uint64_t>(tasks) * cfg.inner_steps;
    case OptimizerKind::SeqReptile:
      return cfg.inner_steps;
  }
  return 0;
}

TrainRecord train(OptimizerKind kind, const TaskSet& tasks, const TaskSampler& sampler, const RunConfig& cfg,
                  const ParamVector& initial, const TrainOptions& options) {
  cfg.validate();
  require_compatible(initial, tasks);
  if (kind == OptimizerKind::SeqReptile && sampler.size() != tasks.size()) {
    throw UsageError("train: sampler does not cover the task set");
  }
  if (kind == OptimizerKind::PcGrad && tasks.size() < 2) throw UsageError("train: pcgrad needs at least two tasks");

  const RandomSource root(cfg.seed);
  const std::uint64_t per_step = gradient_evaluations_per_step(kind, tasks.size(), cfg);
  TrainRecord record{kind, {}};
  record.steps.reserve(cfg.outer_steps + 1);
  record.steps.push_back(snapshot(0, initial, tasks, 0, options));

  ParamVector phi = initial;
  for (std::size_t s = 1; s <= cfg.outer_steps; ++s) {
    const RandomSource step_rng = root.child(s);
    try {
      switch (kind) {
        case OptimizerKind::Mtl:
          phi = joint_mtl_step(phi, tasks, cfg, step_rng);
          break;
        case OptimizerKind::Reptile:
          phi = reptile_meta_step(phi, tasks, cfg, step_rng).phi;
          break;
        case OptimizerKind::SeqReptile:
          phi = sequential_reptile_meta_step(phi, tasks, sampler, cfg, step_rng).phi;
          break;
        case OptimizerKind::PcGrad:
          phi = pcgrad_step(phi, tasks, cfg, step_rng).phi;
          break;
      }
      require_finite(phi, s);
      StepRecord next = snapshot(s, phi, tasks, s * per_step, options);
      if (!std::isfinite(next.mtl_loss)) {
        throw DivergenceError("non-finite MTL loss after outer step " + std::to_string(s), s);
      }
      record.steps.push_back(std::move(next));
    } catch (const DivergenceError& e) {
      throw TrainingDiverged(e, s, std::move(record));
    }
  }
  return record;
}

}  // namespace seqrep
