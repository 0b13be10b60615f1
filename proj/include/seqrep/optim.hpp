#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seqrep/core.hpp"
#include "seqrep/random.hpp"
#include "seqrep/sampler.hpp"
#include "seqrep/tasks.hpp"

namespace seqrep {

enum class OptimizerKind { Mtl, Reptile, SeqReptile, PcGrad };

std::string_view to_string(OptimizerKind kind);
/// Accepts "mtl", "reptile", "seq-reptile", "pcgrad".
OptimizerKind parse_optimizer_kind(std::string_view name);

struct RunConfig {
  double inner_lr = 0.1;          ///< alpha; also the step size of joint MTL and PCGrad
  double outer_lr = 0.5;          ///< eta
  std::size_t inner_steps = 10;   ///< K
  std::size_t outer_steps = 500;
  std::size_t batch_size = 16;
  double l2_coeff = 0.0;          ///< lambda, joint MTL only
  std::optional<ParamVector> l2_reference;
  std::uint64_t seed = 0;

  /// Throws UsageError on invalid values and returns human-readable warnings
  /// (currently only outer_lr > 1, which extrapolates past the trajectory end).
  std::vector<std::string> validate() const;
};

/// theta^(0..K) with the task, batch, loss and gradient used at each step.
struct InnerTrajectory {
  std::vector<ParamVector> iterates;
  std::vector<std::size_t> task_ids;
  std::vector<ParamVector> step_gradients;
  std::vector<MiniBatch> batches;
  std::vector<double> step_losses;

  std::size_t steps() const { return task_ids.size(); }
  const ParamVector& start() const { return iterates.front(); }
  const ParamVector& end() const { return iterates.back(); }
};

/// phi - theta^(K).
struct MetaGradient {
  ParamVector direction;

  static MetaGradient of(const InnerTrajectory& trajectory);
};

/// RNG stream ids used below a step's RandomSource. Batch sampling for task t
/// (or for the whole sequential trajectory) uses child(t) / child(0), so a
/// one-task Reptile step and a Sequential Reptile step consume identical batches.
namespace streams {
inline constexpr std::uint64_t kTaskChoice = 0x7A5C000000000001ULL;
inline constexpr std::uint64_t kPermutation = 0x7A5C000000000002ULL;
}  // namespace streams

/// K SGD steps on one task, batches drawn from `rng`.
InnerTrajectory inner_loop_single_task(const ParamVector& phi, const Task& task, std::size_t task_id,
                                       const RunConfig& cfg, RandomSource& rng);

/// K SGD steps following a fixed task schedule (length K), batches drawn from `batch_rng`.
InnerTrajectory inner_loop_scheduled(const ParamVector& phi, const TaskSet& tasks,
                                     std::span<const std::size_t> schedule, const RunConfig& cfg,
                                     RandomSource& batch_rng);

/// One mixed trajectory: every step draws t_k from the sampler, then a batch of task t_k.
InnerTrajectory sequential_inner_loop(const ParamVector& phi, const TaskSet& tasks, const TaskSampler& sampler,
                                      const RunConfig& cfg, const RandomSource& rng);

/// phi - eta (phi - endpoint); eta == 1 returns the endpoint itself.
ParamVector interpolate_outer(const ParamVector& phi, const ParamVector& endpoint, double eta);

struct ReptileStep {
  ParamVector phi;
  std::vector<InnerTrajectory> trajectories;
};

/// Independent per-task trajectories from the same phi, then phi - eta mean_t MG_t.
ReptileStep reptile_meta_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                              const RandomSource& rng);

struct SequentialStep {
  ParamVector phi;
  InnerTrajectory trajectory;
};

SequentialStep sequential_reptile_meta_step(const ParamVector& phi, const TaskSet& tasks,
                                            const TaskSampler& sampler, const RunConfig& cfg,
                                            const RandomSource& rng);

/// phi - alpha (sum_t g_t + lambda (phi - reference)).
ParamVector joint_mtl_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                           const RandomSource& rng);

struct SurgeryReport {
  struct Entry {
    std::size_t task;     ///< gradient being modified
    std::size_t against;  ///< original gradient projected out
    double dot;           ///< <g_task', g_against> before projection
    bool skipped_zero_norm;
  };
  std::vector<Entry> entries;

  std::size_t projections() const;
};

struct ProjectedGradients {
  std::vector<ParamVector> gradients;
  SurgeryReport report;
};

/// Gradient surgery: for each i, visit j != i in a random order drawn from `rng`
/// and remove the component along the original g_j whenever <g_i', g_j> < 0.
ProjectedGradients project_conflicting(std::span<const ParamVector> gradients, RandomSource& rng);

struct PcGradStep {
  ParamVector phi;
  SurgeryReport report;
};

PcGradStep pcgrad_step(const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg, const RandomSource& rng);

struct StepRecord {
  std::size_t step;
  ParamVector phi;
  double mtl_loss;
  std::vector<double> task_losses;
  std::vector<ParamVector> task_gradients;  ///< empty unless requested
  std::uint64_t gradient_evaluations;       ///< cumulative inner/step gradient evaluations
};

struct TrainRecord {
  OptimizerKind kind;
  std::vector<StepRecord> steps;

  const StepRecord& final_step() const { return steps.back(); }
  std::uint64_t gradient_evaluations() const { return steps.empty() ? 0 : steps.back().gradient_evaluations; }
};

struct TrainOptions {
  bool record_gradients = false;
};

/// Thrown by train() when a step diverges; keeps everything recorded so far.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const DivergenceError& cause, std::size_t outer_step, TrainRecord partial);

  std::size_t outer_step() const { return outer_step_; }
  const TrainRecord& partial() const { return partial_; }

 private:
  std::size_t outer_step_;
  TrainRecord partial_;
};

/// Gradient evaluations one outer step of `kind` costs.
std::uint64_t gradient_evaluations_per_step(OptimizerKind kind, std::size_t tasks, const RunConfig& cfg);

/// Runs cfg.outer_steps updates from `initial`. Outer step s draws from
/// RandomSource(cfg.seed).child(s), so the record is a pure function of the inputs.
TrainRecord train(OptimizerKind kind, const TaskSet& tasks, const TaskSampler& sampler, const RunConfig& cfg,
                  const ParamVector& initial, const TrainOptions& options = {});

}  // namespace seqrep
