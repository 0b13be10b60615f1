#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include "doctest.h"
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

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seqrep-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& stderr_file) {
  const std::string cmd = std::string(SEQREP_CLI_PATH) + " " + args + " > /dev/null 2> " + stderr_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string first_line(const fs::path& file) {
  const std::string text = read_file(file);
  return text.substr(0, text.find('\n'));
}

Json small_config(const std::string& name) {
  return Json::parse(R"({
    "name": ")" + name + R"(",
    "tasks": {"family": "radial", "centers": [[0, 10], [0, 0], [10, 0]]},
    "initial_point": [20, 5],
    "defaults": {"inner_lr": 0.5, "inner_steps": 4, "outer_steps": 30},
    "optimizers": [{"kind": "mtl", "inner_lr": 0.005}, {"kind": "reptile"}, {"kind": "seq-reptile"}, {"kind": "pcgrad", "inner_lr": 0.005}],
    "metric_every": 7,
    "seeds": [7],
    "grid": {"bounds": [-5, 25, -5, 25], "resolution": [21, 21]}
  })");
}

void expect_identical_trees(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  REQUIRE_FALSE(files.empty());
  for (const auto& f : files) {
    INFO(f.string());
    REQUIRE(fs::exists(b / f));
    CHECK(read_file(a / f) == read_file(b / f));
  }
}

}  // namespace

TEST_CASE("format_double round-trips") {
  RandomSource rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(rng.normal(), static_cast<int>(rng.uniform_index(200)) - 100);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::isnan(parse_double("nan")));
  CHECK_THROWS_AS(parse_double("1.5x"), UsageError);
}

TEST_CASE("metric schedule") {
  CHECK(metric_schedule(500, 10).size() == 51);
  CHECK(metric_schedule(5, 2) == std::vector<std::size_t>{0, 2, 4, 5});
  CHECK(metric_schedule(1, 10) == std::vector<std::size_t>{0, 1});
  CHECK(run_directory_name(OptimizerKind::SeqReptile, 3) == "seq-reptile-seed3");
}

TEST_CASE("presets parse and round-trip") {
  std::vector<std::string> names;
  for (const auto& p : list_presets()) names.push_back(p.name);
  for (const char* expected : {"synthetic3", "quad2", "quad3", "regress4"}) {
    CHECK(std::find(names.begin(), names.end(), expected) != names.end());
  }
  for (const auto& name : names) {
    INFO(name);
    const ExperimentConfig c = preset_config(name);
    const Json once = to_json(c);
    CHECK(to_json(parse_config(once)) == once);
    CHECK(build_tasks(c.tasks).size() == c.tasks.task_count());
  }
  CHECK_THROWS_AS(preset_config("nope"), UsageError);

  const ExperimentConfig s = preset_config("synthetic3");
  CHECK(s.resolved_initial_point() == ParamVector{20.0, 5.0});
  CHECK(s.seeds.size() == 10);
  const ExperimentConfig r = preset_config("regress4");
  const TaskSampler sampler = build_sampler(r);
  CHECK(std::abs(sampler.probability(0) - std::pow(100.0, 0.2) /
                                            (std::pow(100.0, 0.2) + std::pow(400.0, 0.2) + std::pow(1600.0, 0.2) +
                                             std::pow(3200.0, 0.2))) <= 1e-12);
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const Json& j) -> std::string {
    try {
      parse_config(j);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "<accepted>";
  };
  Json j = small_config("x");
  CHECK(field_of(j) == "<accepted>");

  j = small_config("x");
  j["bogus"] = 1;
  CHECK(field_of(j) == "/bogus");
  j = small_config("x");
  j["tasks"]["amplitude"] = "big";
  CHECK(field_of(j) == "/tasks/amplitude");
  j = small_config("x");
  j["optimizers"][1]["kind"] = "adam";
  CHECK(field_of(j).rfind("/optimizers/1", 0) == 0);
  j = small_config("x");
  j["seeds"] = Json::array();
  CHECK(field_of(j) == "/seeds");
  j = small_config("x");
  j["defaults"]["inner_steps"] = 0;
  CHECK(field_of(j).rfind("/defaults", 0) == 0);
  j = small_config("x");
  j["tasks"]["centers"][1] = Json::array({1.0});
  CHECK(field_of(j).rfind("/tasks/centers", 0) == 0);
  j = small_config("x");
  j["metric_every"] = -3;
  CHECK(field_of(j) == "/metric_every");
  j["metric_every"] = 3;
  CHECK(field_of(j) == "<accepted>");
  j = small_config("x");
  j.erase("name");
  CHECK(field_of(j) == "/name");
}

TEST_CASE("experiment outputs: headers, schedules and accounting") {
  const fs::path root = scratch("outputs");
  const ExperimentConfig config = parse_config(small_config("small"));
  RunOptions options;
  options.output_root = root;
  const ExperimentResult result = run_experiment(config, options);
  CHECK(result.directory == root / "small");
  CHECK(result.runs.size() == 4);
  CHECK_FALSE(result.diverged());

  const fs::path dir = result.directory;
  CHECK(first_line(dir / "loss_grid.csv") == "x,y,mtl_loss");
  CHECK(read_csv(dir / "loss_grid.csv").rows.size() == 21 * 21);
  CHECK(fs::exists(dir / "manifest.json"));
  for (const auto& run : result.runs) {
    const fs::path r = dir / run.directory;
    CHECK(first_line(r / "trajectory.csv") == "step,phi_0,phi_1");
    CHECK(first_line(r / "metrics.csv") ==
          "step,mtl_loss,task_loss_1,task_loss_2,task_loss_3,mean_offdiag_cosine,l2_from_init");
    CHECK(first_line(r / "alignment.csv") == "task,task_1,task_2,task_3");
    CHECK(read_csv(r / "trajectory.csv").rows.size() == 31);
    const CsvTable metrics = read_csv(r / "metrics.csv");
    std::vector<std::size_t> steps;
    for (const auto& row : metrics.rows) steps.push_back(static_cast<std::size_t>(row[0]));
    CHECK(steps == metric_schedule(30, 7));
    CHECK(metrics.rows.front()[metrics.column("l2_from_init")] == 0.0);

    const Json final = Json::parse(read_file(r / "final.json"));
    const std::uint64_t evals = final["gradient_evaluations"];
    switch (run.kind) {
      case OptimizerKind::SeqReptile: CHECK(evals == 30 * 4); break;
      case OptimizerKind::Reptile: CHECK(evals == 30 * 4 * 3); break;
      default: CHECK(evals == 30 * 3); break;
    }
    CHECK(final["status"] == "completed");
  }
}

TEST_CASE("default metric schedule yields 51 rows over 500 steps") {
  ExperimentConfig config = preset_config("synthetic3");
  config.optimizers.resize(1);
  config.seeds = {1};
  config.grid.reset();
  RunOptions options;
  options.output_root = scratch("schedule");
  const ExperimentResult result = run_experiment(config, options);
  CHECK(read_csv(result.directory / result.runs[0].directory / "metrics.csv").rows.size() == 51);
}

TEST_CASE("reruns and manifest replays are byte-identical") {
  const ExperimentConfig config = parse_config(small_config("det"));
  RunOptions a, b, c;
  a.output_root = scratch("det-a");
  b.output_root = scratch("det-b");
  b.jobs = 4;
  const ExperimentResult ra = run_experiment(config, a);
  const ExperimentResult rb = run_experiment(config, b);
  expect_identical_trees(ra.directory, rb.directory);

  c.output_root = scratch("det-c");
  const ExperimentResult rc = run_experiment(load_config((ra.directory / "manifest.json").string()), c);
  expect_identical_trees(ra.directory, rc.directory);

  const Json manifest = Json::parse(read_file(ra.directory / "manifest.json"));
  CHECK(manifest["rng_algorithm"] == RandomSource::kAlgorithm);
  for (const auto& [file, digest] : manifest["files"].items()) CHECK(sha256_file(ra.directory / file) == digest);
}

TEST_CASE("seed override and output root") {
  const ExperimentConfig config = parse_config(small_config("override"));
  RunOptions options;
  options.output_root = scratch("override");
  options.seed_override = 99;
  const ExperimentResult result = run_experiment(config, options);
  for (const auto& r : result.runs) CHECK(r.seed == 99);

  ::setenv(kOutputRootVariable, "/tmp/somewhere", 1);
  CHECK(default_output_root() == fs::path("/tmp/somewhere"));
  ::unsetenv(kOutputRootVariable);
  CHECK(default_output_root() == fs::path("runs"));
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  const fs::path err = dir / "stderr.txt";

  Json bad = small_config("bad");
  bad["tasks"]["shape"] = "round";
  write_file(dir / "bad.json", bad.dump());
  CHECK(run_cli("run " + (dir / "bad.json").string() + " --out " + dir.string(), err) == 2);
  CHECK(read_file(err).find("/tasks/shape") != std::string::npos);
  CHECK(run_cli("run no-such-preset --out " + dir.string(), err) == 2);
  CHECK(run_cli("verify nonsense", err) == 2);
  CHECK(run_cli("", err) == 2);

  Json blowup = small_config("blowup");
  blowup["tasks"] = Json::parse(R"({"family": "quadratic", "targets": [[0, 0], [1, 1]]})");
  blowup["initial_point"] = Json::array({1.0, 1.0});
  blowup["optimizers"] = Json::parse(R"([{"kind": "mtl", "inner_lr": 1e100}, {"kind": "seq-reptile", "inner_lr": 0.1}])");
  blowup.erase("grid");
  write_file(dir / "blowup.json", blowup.dump());
  CHECK(run_cli("run " + (dir / "blowup.json").string() + " --out " + dir.string(), err) == 3);
  const fs::path diverged = dir / "blowup" / "mtl-seed7";
  REQUIRE(fs::exists(diverged / "trajectory.csv"));
  CHECK(read_csv(diverged / "trajectory.csv").rows.size() >= 2);
  CHECK(Json::parse(read_file(diverged / "final.json"))["status"] == "diverged");
  CHECK(fs::exists(dir / "blowup" / "seq-reptile-seed7" / "final.json"));
  CHECK(fs::exists(dir / "blowup" / "manifest.json"));

  CHECK(run_cli("verify gradcheck --out " + dir.string(), err) == 0);
  const Json report = Json::parse(read_file(dir / "verify-gradcheck.json"));
  CHECK(report["passed"] == true);
  CHECK(run_cli("presets", err) == 0);
}

TEST_CASE("verification reports") {
  for (const std::string& suite : {"taylor", "oracle", "gradcheck"}) {
    const VerificationReport r = run_verification(suite);
    INFO(suite);
    CHECK(r.passed());
    CHECK_FALSE(r.checks.empty());
    CHECK(r.to_json()["checks"].size() == r.checks.size());
  }
  CHECK_THROWS_AS(run_verification("bogus"), UsageError);
}

TEST_CASE("plots: markers, heatmap cells and determinism") {
  Json j = small_config("plots");
  j["defaults"]["outer_steps"] = 1;
  j["optimizers"] = Json::parse(R"([{"kind": "seq-reptile"}])");
  RunOptions options;
  options.output_root = scratch("plots");
  const ExperimentResult result = run_experiment(parse_config(j), options);
  const auto written = emit_plots(result.directory);
  CHECK(written.size() == 2);
  const fs::path run = result.directory / "seq-reptile-seed7";
  const std::string trajectory = read_file(run / "trajectory.svg");
  CHECK(count(trajectory, "<circle class=\"marker\"") == 2);
  CHECK(count(trajectory, "class=\"contour\"") >= 1);
  const std::string heatmap = read_file(run / "alignment.svg");
  CHECK(count(heatmap, "class=\"cell\"") == 9);
  CHECK(count(heatmap, "class=\"annotation\"") == 9);

  emit_plots(run);
  CHECK(read_file(run / "trajectory.svg") == trajectory);
  CHECK(read_file(run / "alignment.svg") == heatmap);

  fs::remove(result.directory / "loss_grid.csv");
  try {
    emit_plots(result.directory);
    FAIL("expected a missing-input error");
  } catch (const PlotInputError& e) {
    CHECK(e.file().filename() == "loss_grid.csv");
  }
  const fs::path err = result.directory / "stderr.txt";
  CHECK(run_cli("plot " + result.directory.string(), err) == 2);
  CHECK(read_file(err).find("loss_grid.csv") != std::string::npos);
}

TEST_CASE("contour helpers") {
  GridData grid;
  grid.xs = {0.0, 1.0, 2.0};
  grid.ys = {0.0, 1.0, 2.0};
  grid.values = {0, 1, 2, 1, 2, 3, 2, 3, 4};
  const auto levels = contour_levels(grid);
  CHECK(std::is_sorted(levels.begin(), levels.end()));
  CHECK(std::adjacent_find(levels.begin(), levels.end()) == levels.end());
  // The level-1.5 line of f = x + y runs from (1.5, 0) to (0, 1.5).
  for (const Segment& s : contour_segments(grid, 1.5)) {
    CHECK(s.x0 + s.y0 == doctest::Approx(1.5));
    CHECK(s.x1 + s.y1 == doctest::Approx(1.5));
  }
  CHECK(contour_segments(grid, 1.5).size() == 3);
  CHECK(contour_segments(grid, 10.0).empty());
}
