#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "seqrep/harness/config.hpp"
#include "seqrep/harness/experiment.hpp"
#include "seqrep/harness/io.hpp"
#include "seqrep/harness/plot.hpp"
#include "seqrep/harness/presets.hpp"
#include "seqrep/harness/verify.hpp"

namespace fs = std::filesystem;
using namespace seqrep;
using namespace seqrep::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

ExperimentConfig resolve_config(const std::string& source) {
  if (fs::exists(source)) return load_config(source);
  if (is_preset(source)) return preset_config(source);
  throw ConfigError(source, "neither a config file nor a preset name (see `seqrep presets`)");
}

int cmd_run(const std::string& source, const std::optional<std::string>& out, std::optional<std::uint64_t> seed,
            std::size_t jobs) {
  const ExperimentConfig config = resolve_config(source);
  RunOptions options;
  if (out) options.output_root = fs::path(*out);
  options.jobs = jobs;
  options.seed_override = seed;
  const ExperimentResult result = run_experiment(config, options);

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("%-22s %-10s %10s %14s %12s %10s\n", "run", "status", "steps", "mtl_loss", "mean_cos", "nearest");
  for (const auto& r : result.runs) {
    const std::string nearest =
        r.nearest_center ? "x" + std::to_string(*r.nearest_center + 1) + "@" + format_double(std::round(r.nearest_distance * 1000) / 1000)
                         : "-";
    std::printf("%-22s %-10s %10zu %14.6g %12.4f %10s\n", r.directory.c_str(),
                r.status == RunStatus::Completed ? "ok" : "diverged", r.steps_completed, r.mtl_loss,
                r.mean_offdiag_cosine, nearest.c_str());
  }
  std::printf("outputs: %s\n", result.directory.string().c_str());
  if (result.diverged()) {
    for (const auto& r : result.runs) {
      if (r.status == RunStatus::Diverged) std::cerr << "diverged: " << r.directory << ": " << r.message << "\n";
    }
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_verify(const std::string& suite, const std::optional<std::string>& out) {
  const VerificationReport report = run_verification(suite);
  const fs::path root = out ? fs::path(*out) : default_output_root();
  const fs::path path = root / ("verify-" + suite + ".json");
  write_file(path, report.to_json().dump(2) + "\n");
  for (const auto& c : report.checks) {
    std::printf("[%s] %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str());
  }
  std::printf("report: %s\n", path.string().c_str());
  return report.passed() ? kExitOk : kExitFailed;
}

int cmd_plot(const std::string& dir) {
  for (const auto& p : emit_plots(dir)) std::printf("%s\n", p.string().c_str());
  return kExitOk;
}

int cmd_presets() {
  for (const auto& p : list_presets()) std::printf("%-12s %s\n", p.name.c_str(), p.description.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Reptile experiments: optimizer comparisons, verification suites and plots"};
  app.require_subcommand(1);

  std::optional<std::string> out;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 1;

  auto* run = app.add_subcommand("run", "run an experiment from a config file, manifest or preset name");
  std::string source;
  run->add_option("config", source, "config path, manifest.json, or preset name")->required();
  run->add_option("--seed-override", seed_override, "replace the seed list with this single seed");
  run->add_option("--out", out, "output root (default: $SEQREP_OUTPUT_ROOT or ./runs)");
  run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run a verification suite and write a JSON report");
  std::string suite;
  verify->add_option("suite", suite, "taylor | oracle | gradcheck | all")
      ->required()
      ->check(CLI::IsMember(verification_suites()));
  verify->add_option("--out", out, "report directory (default: $SEQREP_OUTPUT_ROOT or ./runs)");

  auto* plot = app.add_subcommand("plot", "render SVG plots for an experiment directory");
  std::string plot_dir;
  plot->add_option("run-dir", plot_dir, "experiment or run directory")->required();

  app.add_subcommand("presets", "list built-in experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(source, out, seed_override, jobs);
    if (verify->parsed()) return cmd_verify(suite, out);
    if (plot->parsed()) return cmd_plot(plot_dir);
    return cmd_presets();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}
