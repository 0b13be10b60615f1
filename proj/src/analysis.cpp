#include "seqrep/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace seqrep {
namespace {

std::uint64_t sequence_count(std::size_t tasks, std::size_t steps) {
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < steps; ++k) {
    if (count > kEnumerationLimit / tasks) {
      throw EnumerationLimitError("exact enumeration over " + std::to_string(tasks) + "^" + std::to_string(steps) +
                                  " sequences exceeds the limit of " + std::to_string(kEnumerationLimit) +
                                  "; use the Monte Carlo estimator instead");
    }
    count *= tasks;
  }
  return count;
}

/// Calls fn(sequence, probability) for every sequence in lexicographic order.
template <typename Fn>
std::uint64_t for_each_sequence(const TaskSampler& sampler, std::size_t steps, Fn&& fn) {
  const std::size_t tasks = sampler.size();
  const std::uint64_t total = sequence_count(tasks, steps);
  std::vector<std::size_t> seq(steps, 0);
  for (std::uint64_t n = 0; n < total; ++n) {
    double weight = 1.0;
    for (std::size_t t : seq) weight *= sampler.probability(t);
    fn(std::span<const std::size_t>(seq), weight);
    for (std::size_t pos = steps; pos-- > 0;) {
      if (++seq[pos] < tasks) break;
      seq[pos] = 0;
    }
  }
  return total;
}

void require_deterministic(const TaskSet& tasks, const char* context) {
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!tasks[t]->deterministic()) {
      throw UsageError(std::string(context) + ": task " + std::to_string(t + 1) +
                       " is stochastic; exact enumeration needs full-batch tasks");
    }
  }
}

std::vector<SequenceEntry> full_batch_sequence(const TaskSet& tasks, std::span<const std::size_t> seq) {
  std::vector<SequenceEntry> out;
  out.reserve(seq.size());
  for (std::size_t t : seq) out.push_back({t, tasks[t]->full_batch()});
  return out;
}

}  // namespace

ExpectationEstimate expected_meta_gradient_exact(const ParamVector& phi, const TaskSet& tasks,
                                                 const TaskSampler& sampler, const RunConfig& cfg) {
  require_task_set(tasks);
  require_deterministic(tasks, "expected_meta_gradient_exact");
  if (sampler.size() != tasks.size()) throw UsageError("sampler does not cover the task set");
  if (cfg.inner_steps < 1) throw UsageError("inner_steps must be at least 1");

  ParamVector value = ParamVector::zeros(phi.dim());
  double weight_sum = 0.0;
  RandomSource unused(0);
  const std::uint64_t count = for_each_sequence(sampler, cfg.inner_steps, [&](auto seq, double weight) {
    const InnerTrajectory traj = inner_loop_scheduled(phi, tasks, seq, cfg, unused);
    value.axpy(weight, MetaGradient::of(traj).direction);
    weight_sum += weight;
  });
  return {std::move(value), EstimateMethod::ExactEnumeration, count, std::nullopt, weight_sum};
}

ExpectationEstimate expected_meta_gradient_mc(const ParamVector& phi, const TaskSet& tasks,
                                              const TaskSampler& sampler, const RunConfig& cfg,
                                              std::size_t samples, const RandomSource& rng) {
  if (samples < 2) throw UsageError("expected_meta_gradient_mc: need at least 2 samples");
  const std::size_t dim = phi.dim();
  // Welford accumulation in sample order.
  std::vector<double> mean(dim, 0.0), m2(dim, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const RandomSource sample_rng = rng.child(i);
    ParamVector mg = ParamVector::zeros(dim);
    try {
      mg = MetaGradient::of(sequential_inner_loop(phi, tasks, sampler, cfg, sample_rng)).direction;
    } catch (const DivergenceError& e) {
      throw DivergenceError("Monte Carlo sample " + std::to_string(i) + " (seed " + std::to_string(rng.seed()) +
                                ", stream " + std::to_string(sample_rng.stream()) + "): " + e.what(),
                            e.step(), e.task());
    }
    const double n = static_cast<double>(i + 1);
    for (std::size_t d = 0; d < dim; ++d) {
      const double delta = mg[d] - mean[d];
      mean[d] += delta / n;
      m2[d] += delta * (mg[d] - mean[d]);
    }
  }
  std::vector<double> se(dim);
  const double n = static_cast<double>(samples);
  for (std::size_t d = 0; d < dim; ++d) se[d] = std::sqrt(m2[d] / (n - 1.0) / n);
  return {ParamVector(std::move(mean)), EstimateMethod::MonteCarlo, samples, ParamVector(std::move(se)), 1.0};
}

double surrogate_loss(const ParamVector& phi, const TaskSet& tasks, std::span<const SequenceEntry> sequence,
                      double alpha) {
  double loss = 0.0;
  std::vector<ParamVector> grads;
  grads.reserve(sequence.size());
  for (const auto& entry : sequence) {
    Evaluation eval = tasks.at(entry.task)->evaluate(phi, entry.batch);
    loss += eval.loss;
    grads.push_back(std::move(eval.gradient));
  }
  double alignment = 0.0;
  for (std::size_t k = 1; k < grads.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) alignment += dot(grads[k], grads[j]);
  }
  return loss - 0.5 * alpha * alignment;
}

SurrogateEval surrogate_objective(const ParamVector& phi, const TaskSet& tasks,
                                  std::span<const SequenceEntry> sequence, double alpha) {
  require_task_set(tasks);
  if (sequence.empty()) throw UsageError("surrogate_objective: sequence must not be empty");
  const double value = surrogate_loss(phi, tasks, sequence, alpha);

  const bool closed_form = std::all_of(sequence.begin(), sequence.end(),
                                       [&](const SequenceEntry& e) { return tasks.at(e.task)->identity_hessian(); });
  if (!closed_form) {
    auto f = [&](const ParamVector& x) { return surrogate_loss(x, tasks, sequence, alpha); };
    return {value, finite_difference_gradient(f, phi)};
  }

  // d<g_k, g_j>/dphi = H_k g_j + H_j g_k = g_j + g_k for unit Hessians.
  std::vector<ParamVector> grads;
  grads.reserve(sequence.size());
  for (const auto& entry : sequence) grads.push_back(tasks[entry.task]->evaluate(phi, entry.batch).gradient);
  ParamVector gradient = ParamVector::zeros(phi.dim());
  for (const auto& g : grads) gradient += g;
  const std::size_t count = grads.size();
  for (std::size_t k = 0; k < count; ++k) {
    // g_k pairs with every other entry exactly once in the double sum.
    gradient.axpy(-0.5 * alpha * static_cast<double>(count - 1), grads[k]);
  }
  return {value, std::move(gradient)};
}

TaylorTable taylor_order_check(const ParamVector& phi, const TaskSet& tasks, const TaskSampler& sampler,
                               std::size_t inner_steps, std::span<const double> alphas) {
  require_task_set(tasks);
  require_deterministic(tasks, "taylor_order_check");
  if (alphas.empty()) throw UsageError("taylor_order_check: need at least one step size");
  TaylorTable table;
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) throw UsageError("taylor_order_check: step sizes must be positive");
    RunConfig cfg;
    cfg.inner_lr = alpha;
    cfg.inner_steps = inner_steps;
    const ExpectationEstimate exact = expected_meta_gradient_exact(phi, tasks, sampler, cfg);

    ParamVector surrogate_grad = ParamVector::zeros(phi.dim());
    for_each_sequence(sampler, inner_steps, [&](auto seq, double weight) {
      const auto entries = full_batch_sequence(tasks, seq);
      surrogate_grad.axpy(weight, surrogate_objective(phi, tasks, entries, alpha).surrogate_gradient);
    });
    ParamVector diff = exact.value;
    diff.axpy(-alpha, surrogate_grad);
    table.rows.push_back({alpha, norm(diff)});
  }
  for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
    table.ratios.push_back(table.rows[i].residual / table.rows[i + 1].residual);
  }
  return table;
}

GradientAlignmentReport alignment_report(const ParamVector& phi, const TaskSet& tasks) {
  const std::size_t count = tasks.size();
  require_task_set(tasks);
  std::vector<ParamVector> grads;
  grads.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    grads.push_back(tasks[t]->evaluate_full(phi).gradient);
    if (norm(grads.back()) == 0.0) {
      throw ZeroGradientError("task " + std::to_string(t + 1) + " has a zero gradient (its optimum was reached)", t);
    }
  }
  GradientAlignmentReport report{count, std::vector<double>(count * count, 1.0), 0.0};
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      const double c = cosine_similarity(grads[i], grads[j]);
      report.matrix[i * count + j] = c;
      report.matrix[j * count + i] = c;
      sum += c;
    }
  }
  const std::size_t pairs = count * (count - 1) / 2;
  report.mean_offdiagonal = pairs == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(pairs);
  return report;
}

namespace {
double lattice(double lo, double hi, std::size_t i, std::size_t n) {
  if (i + 1 == n) return hi;
  return lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n - 1));
}
}  // namespace

double LossGrid::x(std::size_t ix) const { return lattice(bounds.x_min, bounds.x_max, ix, nx); }
double LossGrid::y(std::size_t iy) const { return lattice(bounds.y_min, bounds.y_max, iy, ny); }

LossGrid loss_grid(const TaskSet& tasks, const Bounds2D& bounds, std::size_t nx, std::size_t ny) {
  if (require_task_set(tasks) != 2) throw UsageError("loss_grid: tasks must be two-dimensional");
  if (nx < 2 || ny < 2) throw UsageError("loss_grid: resolution must be at least 2 per axis");
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) {
    throw UsageError("loss_grid: bounds must have positive extent");
  }
  LossGrid grid{bounds, nx, ny, {}};
  grid.values.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      grid.values.push_back(mtl_loss(tasks, ParamVector{grid.x(ix), grid.y(iy)}));
    }
  }
  return grid;
}

ParamVector finite_difference_gradient(const std::function<double(const ParamVector&)>& f, const ParamVector& phi,
                                       double h) {
  ParamVector grad = ParamVector::zeros(phi.dim());
  for (std::size_t i = 0; i < phi.dim(); ++i) {
    const double step = h * std::max(1.0, std::abs(phi[i]));
    ParamVector plus = phi, minus = phi;
    plus[i] += step;
    minus[i] -= step;
    grad[i] = (f(plus) - f(minus)) / (plus[i] - minus[i]);
  }
  return grad;
}

double relative_gradient_error(const Task& task, const ParamVector& phi, const MiniBatch& batch, double h) {
  const ParamVector analytic = task.evaluate(phi, batch).gradient;
  const ParamVector numeric =
      finite_difference_gradient([&](const ParamVector& x) { return task.evaluate(x, batch).loss; }, phi, h);
  const double scale = std::max({norm(analytic), norm(numeric), 1e-6});
  return l2_distance(analytic, numeric) / scale;
}

}  // namespace seqrep
