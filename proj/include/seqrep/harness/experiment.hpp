#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seqrep/harness/config.hpp"

namespace seqrep::harness {

inline constexpr const char* kGeneratorName = "seqrep";
inline constexpr const char* kOutputRootVariable = "SEQREP_OUTPUT_ROOT";

enum class RunStatus { Completed, Diverged };

struct RunSummary {
  OptimizerKind kind = OptimizerKind::Mtl;
  std::uint64_t seed = 0;
  std::string directory;  ///< relative to the experiment directory
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::size_t steps_completed = 0;
  ParamVector final_phi = ParamVector::zeros(1);
  double mtl_loss = 0.0;
  double mean_offdiag_cosine = 0.0;  ///< NaN when undefined
  std::optional<std::size_t> nearest_center;
  double nearest_distance = 0.0;  ///< NaN for regression tasks
  std::uint64_t gradient_evaluations = 0;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<RunSummary> runs;
  std::vector<std::string> warnings;

  bool diverged() const;
  std::vector<const RunSummary*> runs_of(OptimizerKind kind) const;
};

struct RunOptions {
  std::optional<std::filesystem::path> output_root;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
};

/// $SEQREP_OUTPUT_ROOT when set, otherwise "runs".
std::filesystem::path default_output_root();

/// --out root wins, then the config's output_dir, then the default root; the
/// experiment lands in <root>/<name>.
std::filesystem::path experiment_directory(const ExperimentConfig& config,
                                           const std::optional<std::filesystem::path>& output_root);

/// Steps 0, m, 2m, ... up to `last`, plus `last` itself.
std::vector<std::size_t> metric_schedule(std::size_t last, std::size_t every);

std::string run_directory_name(OptimizerKind kind, std::uint64_t seed);

/// Writes every (optimizer, seed) run, the loss grid and manifest.json.
/// Divergent runs keep their partial outputs and are reported, not thrown.
ExperimentResult run_experiment(ExperimentConfig config, const RunOptions& options);

}  // namespace seqrep::harness
