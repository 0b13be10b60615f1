#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "seqrep/analysis.hpp"
#include "seqrep/errors.hpp"
#include "seqrep/optim.hpp"
#include "seqrep/sampler.hpp"
#include "seqrep/tasks.hpp"

namespace seqrep::harness {

using Json = nlohmann::ordered_json;

/// Invalid experiment configuration; `field` is a JSON-pointer-like path.
class ConfigError : public UsageError {
 public:
  ConfigError(std::string field, const std::string& message)
      : UsageError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class TaskFamily { Radial, Quadratic, Regression };

struct TaskSetSpec {
  TaskFamily family = TaskFamily::Radial;
  std::vector<ParamVector> centers;  ///< radial centers or quadratic targets
  double amplitude = RadialTask::kDefaultAmplitude;
  double rate = RadialTask::kDefaultRate;
  // Regression only.
  std::vector<std::size_t> counts;
  std::size_t dim = 2;
  double noise = 0.1;
  std::uint64_t data_seed = 0;
  std::vector<ParamVector> true_weights;  ///< one per task; drawn from data_seed when empty

  std::size_t task_count() const;
  std::size_t parameter_dim() const;
};

enum class SamplerKind { Uniform, Counts, Probabilities };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Uniform;
  double exponent = 0.2;
  std::vector<std::size_t> counts;  ///< Counts mode; falls back to the regression counts
  std::vector<double> probabilities;
};

struct OptimizerSpec {
  OptimizerKind kind;
  RunConfig config;  ///< fully resolved; seed is filled per run
};

struct GridSpec {
  Bounds2D bounds{-5.0, 25.0, -5.0, 25.0};
  std::size_t nx = 301;
  std::size_t ny = 301;
};

struct ExperimentConfig {
  std::string name;
  TaskSetSpec tasks;
  std::optional<ParamVector> initial_point;  ///< zeros when absent
  SamplerSpec sampler;
  RunConfig defaults;
  std::vector<OptimizerSpec> optimizers;
  std::size_t metric_every = 10;
  std::vector<std::uint64_t> seeds;
  std::optional<GridSpec> grid;  ///< two-dimensional task sets only
  std::string output_dir;        ///< empty: <output root>/<name>

  ParamVector resolved_initial_point() const;
};

/// Parses and validates; unknown keys are rejected. Optimizer entries carry
/// only overrides of `defaults`.
ExperimentConfig parse_config(const Json& json);

/// Reads a config file, or the "config" member of a run manifest.
ExperimentConfig load_config(const std::string& path);

/// Every default materialized; parse_config(to_json(c)) reproduces c.
/// The output directory is omitted so manifests do not depend on location.
Json to_json(const ExperimentConfig& config);

TaskSet build_tasks(const TaskSetSpec& spec);
TaskSampler build_sampler(const ExperimentConfig& config);

std::string to_string(TaskFamily family);

}  // namespace seqrep::harness
