#include "seqrep/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <thread>

#include "seqrep/harness/io.hpp"

namespace seqrep::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_cosine_or_nan(const ParamVector& phi, const TaskSet& tasks) {
  try {
    return alignment_report(phi, tasks).mean_offdiagonal;
  } catch (const ZeroGradientError&) {
    return kNaN;
  }
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::string trajectory_csv(const TrainRecord& record) {
  const std::size_t dim = record.steps.front().phi.dim();
  std::vector<std::string> header{"step"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("phi_" + std::to_string(d));
  CsvWriter csv(header);
  std::vector<double> row(dim + 1);
  for (const auto& s : record.steps) {
    row[0] = static_cast<double>(s.step);
    for (std::size_t d = 0; d < dim; ++d) row[d + 1] = s.phi[d];
    csv.row(row);
  }
  return csv.str();
}

std::string metrics_csv(const TrainRecord& record, const TaskSet& tasks, std::size_t every) {
  const std::size_t count = tasks.size();
  std::vector<std::string> header{"step", "mtl_loss"};
  for (std::size_t t = 0; t < count; ++t) header.push_back("task_loss_" + std::to_string(t + 1));
  header.push_back("mean_offdiag_cosine");
  header.push_back("l2_from_init");
  CsvWriter csv(header);
  const ParamVector& initial = record.steps.front().phi;
  std::vector<double> row;
  for (std::size_t step : metric_schedule(record.steps.back().step, every)) {
    const StepRecord& s = record.steps[step];
    row.clear();
    row.push_back(static_cast<double>(s.step));
    row.push_back(s.mtl_loss);
    row.insert(row.end(), s.task_losses.begin(), s.task_losses.end());
    row.push_back(mean_cosine_or_nan(s.phi, tasks));
    row.push_back(l2_distance(s.phi, initial));
    csv.row(row);
  }
  return csv.str();
}

struct AlignmentOutput {
  std::string csv;
  std::optional<std::string> error;
  double mean = kNaN;
};

AlignmentOutput alignment_csv(const ParamVector& phi, const TaskSet& tasks) {
  const std::size_t count = tasks.size();
  std::vector<std::string> header{"task"};
  for (std::size_t t = 0; t < count; ++t) header.push_back("task_" + std::to_string(t + 1));
  CsvWriter csv(header);
  AlignmentOutput out;
  std::optional<GradientAlignmentReport> report;
  try {
    report = alignment_report(phi, tasks);
    out.mean = report->mean_offdiagonal;
  } catch (const ZeroGradientError& e) {
    out.error = e.what();
  }
  std::vector<double> row(count + 1);
  for (std::size_t i = 0; i < count; ++i) {
    row[0] = static_cast<double>(i + 1);
    for (std::size_t j = 0; j < count; ++j) row[j + 1] = report ? report->at(i, j) : kNaN;
    csv.row(row);
  }
  out.csv = csv.str();
  return out;
}

void fill_nearest(RunSummary& summary, const ExperimentConfig& config) {
  summary.nearest_distance = kNaN;
  if (config.tasks.family == TaskFamily::Regression) return;
  for (std::size_t t = 0; t < config.tasks.centers.size(); ++t) {
    const double d = l2_distance(summary.final_phi, config.tasks.centers[t]);
    if (!summary.nearest_center || d < summary.nearest_distance) {
      summary.nearest_center = t;
      summary.nearest_distance = d;
    }
  }
}

RunSummary execute_run(const ExperimentConfig& config, const OptimizerSpec& spec, std::uint64_t seed,
                       const TaskSet& tasks, const TaskSampler& sampler, const std::filesystem::path& root) {
  RunSummary summary;
  summary.kind = spec.kind;
  summary.seed = seed;
  summary.directory = run_directory_name(spec.kind, seed);

  RunConfig cfg = spec.config;
  cfg.seed = seed;
  TrainRecord record{spec.kind, {}};
  std::optional<std::size_t> diverged_at;
  try {
    record = train(spec.kind, tasks, sampler, cfg, config.resolved_initial_point());
  } catch (const TrainingDiverged& e) {
    record = e.partial();
    summary.status = RunStatus::Diverged;
    summary.message = e.what();
    diverged_at = e.outer_step();
  }

  const std::filesystem::path dir = root / summary.directory;
  std::filesystem::create_directories(dir);
  const StepRecord& last = record.final_step();
  summary.steps_completed = last.step;
  summary.final_phi = last.phi;
  summary.mtl_loss = last.mtl_loss;
  summary.gradient_evaluations = record.gradient_evaluations();
  fill_nearest(summary, config);

  write_file(dir / "trajectory.csv", trajectory_csv(record));
  write_file(dir / "metrics.csv", metrics_csv(record, tasks, config.metric_every));
  const AlignmentOutput alignment = alignment_csv(last.phi, tasks);
  summary.mean_offdiag_cosine = alignment.mean;
  write_file(dir / "alignment.csv", alignment.csv);

  Json final;
  final["optimizer"] = std::string(to_string(spec.kind));
  final["seed"] = seed;
  final["status"] = summary.status == RunStatus::Completed ? "completed" : "diverged";
  if (diverged_at) {
    final["diverged_at_step"] = *diverged_at;
    final["message"] = summary.message;
  }
  final["outer_steps_completed"] = last.step;
  final["phi"] = last.phi.values();
  final["mtl_loss"] = number_or_null(last.mtl_loss);
  final["task_losses"] = Json::array();
  for (double l : last.task_losses) final["task_losses"].push_back(number_or_null(l));
  final["mean_offdiag_cosine"] = number_or_null(alignment.mean);
  if (alignment.error) final["alignment_error"] = *alignment.error;
  final["l2_from_init"] = l2_distance(last.phi, record.steps.front().phi);
  final["gradient_evaluations"] = summary.gradient_evaluations;
  if (summary.nearest_center) {
    final["nearest_task"] = *summary.nearest_center + 1;
    final["nearest_distance"] = summary.nearest_distance;
  }
  write_file(dir / "final.json", final.dump(2) + "\n");
  return summary;
}

std::string loss_grid_csv(const LossGrid& grid) {
  const std::vector<std::string> header{"x", "y", "mtl_loss"};
  CsvWriter csv(header);
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      const double row[] = {grid.x(ix), grid.y(iy), grid.at(ix, iy)};
      csv.row(row);
    }
  }
  return csv.str();
}

}  // namespace

bool ExperimentResult::diverged() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunSummary& r) { return r.status == RunStatus::Diverged; });
}

std::vector<const RunSummary*> ExperimentResult::runs_of(OptimizerKind kind) const {
  std::vector<const RunSummary*> out;
  for (const auto& r : runs) {
    if (r.kind == kind) out.push_back(&r);
  }
  return out;
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv(kOutputRootVariable);
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("runs");
}

std::filesystem::path experiment_directory(const ExperimentConfig& config,
                                           const std::optional<std::filesystem::path>& output_root) {
  if (output_root) return *output_root / config.name;
  if (!config.output_dir.empty()) return config.output_dir;
  return default_output_root() / config.name;
}

std::vector<std::size_t> metric_schedule(std::size_t last, std::size_t every) {
  if (every == 0) throw UsageError("metric schedule: interval must be at least 1");
  std::vector<std::size_t> steps;
  for (std::size_t s = 0; s <= last; s += every) steps.push_back(s);
  if (steps.back() != last) steps.push_back(last);
  return steps;
}

std::string run_directory_name(OptimizerKind kind, std::uint64_t seed) {
  return std::string(to_string(kind)) + "-seed" + std::to_string(seed);
}

ExperimentResult run_experiment(ExperimentConfig config, const RunOptions& options) {
  if (options.seed_override) config.seeds = {*options.seed_override};
  const TaskSet tasks = build_tasks(config.tasks);
  const TaskSampler sampler = build_sampler(config);

  ExperimentResult result;
  result.directory = experiment_directory(config, options.output_root);
  for (const auto& o : config.optimizers) {
    for (const auto& w : o.config.validate()) result.warnings.push_back(std::string(to_string(o.kind)) + ": " + w);
  }
  std::filesystem::create_directories(result.directory);

  std::vector<std::string> files;
  if (config.grid) {
    const LossGrid grid = loss_grid(tasks, config.grid->bounds, config.grid->nx, config.grid->ny);
    write_file(result.directory / "loss_grid.csv", loss_grid_csv(grid));
    files.push_back("loss_grid.csv");
  }

  struct Job {
    const OptimizerSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& o : config.optimizers) {
    for (std::uint64_t seed : config.seeds) jobs.push_back({&o, seed});
  }
  result.runs.resize(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        result.runs[i] = execute_run(config, *jobs[i].spec, jobs[i].seed, tasks, sampler, result.directory);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(jobs.size(), 1));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Json runs = Json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"optimizer", std::string(to_string(r.kind))},
                    {"seed", r.seed},
                    {"directory", r.directory},
                    {"status", r.status == RunStatus::Completed ? "completed" : "diverged"}});
    for (const char* name : {"trajectory.csv", "metrics.csv", "alignment.csv", "final.json"}) {
      files.push_back(r.directory + "/" + name);
    }
  }
  std::sort(files.begin(), files.end());
  Json checksums = Json::object();
  for (const auto& f : files) checksums[f] = sha256_file(result.directory / f);

  Json manifest;
  manifest["generator"] = kGeneratorName;
  manifest["version"] = SEQREP_VERSION;
  manifest["rng_algorithm"] = std::string(RandomSource::kAlgorithm);
  manifest["config"] = to_json(config);
  manifest["runs"] = std::move(runs);
  manifest["files"] = std::move(checksums);
  write_file(result.directory / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace seqrep::harness
