#include "seqrep/harness/verify.hpp"

#include <algorithm>
#include <cmath>

#include "seqrep/harness/presets.hpp"

namespace seqrep::harness {
namespace {

constexpr double kRatioLow = 5.5;
constexpr double kRatioHigh = 10.5;
constexpr double kExactResidual = 1e-12;
constexpr double kGradcheckTolerance = 1e-5;
constexpr std::size_t kGradcheckPoints = 100;
constexpr std::size_t kOracleSamples = 10000;
constexpr double kOracleStandardErrors = 4.0;
constexpr double kOracleFloor = 1e-12;
constexpr std::uint64_t kVerifySeed = 20240607;
constexpr double kTaylorAlphas[] = {1e-2, 5e-3, 2.5e-3};

TaskSet quad_tasks(std::string_view preset) { return build_tasks(preset_config(preset).tasks); }

Json table_json(const TaylorTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) rows.push_back({{"alpha", r.alpha}, {"residual", r.residual}});
  Json ratios = Json::array();
  for (double r : table.ratios) ratios.push_back(std::isfinite(r) ? Json(r) : Json(nullptr));
  return {{"rows", rows}, {"ratios", ratios}};
}

CheckResult ratio_check(std::string name, const ParamVector& phi, const TaskSet& tasks, std::size_t steps) {
  const TaylorTable table = taylor_order_check(phi, tasks, TaskSampler::uniform(tasks.size()), steps, kTaylorAlphas);
  const bool ok = std::all_of(table.ratios.begin(), table.ratios.end(),
                              [](double r) { return r >= kRatioLow && r <= kRatioHigh; });
  return {std::move(name), ok, table_json(table), "every ratio in [5.5, 10.5]"};
}

CheckResult exact_check(std::string name, const ParamVector& phi, const TaskSet& tasks, std::size_t steps) {
  const TaylorTable table = taylor_order_check(phi, tasks, TaskSampler::uniform(tasks.size()), steps, kTaylorAlphas);
  const bool ok = std::all_of(table.rows.begin(), table.rows.end(),
                              [](const TaylorRow& r) { return r.residual <= kExactResidual; });
  return {std::move(name), ok, table_json(table), "every residual <= 1e-12"};
}

TaskSet first_task(const TaskSet& tasks) { return {tasks.front()}; }

void taylor_suite(std::vector<CheckResult>& out) {
  const ParamVector phi{0.3, 0.7};
  const TaskSet quad2 = quad_tasks("quad2");
  const TaskSet quad3 = quad_tasks("quad3");
  out.push_back(ratio_check("taylor/quad2/T=2/K=3", phi, quad2, 3));
  out.push_back(ratio_check("taylor/quad2/T=1/K=3", phi, first_task(quad2), 3));
  out.push_back(ratio_check("taylor/quad3/T=3/K=3", phi, quad3, 3));
  out.push_back(exact_check("taylor/quad2/T=2/K=2 exact in expectation", phi, quad2, 2));
  out.push_back(exact_check("taylor/quad2/T=1/K=2 exact", phi, first_task(quad2), 2));
  out.push_back(exact_check("taylor/quad2/T=2/K=1 exact", phi, quad2, 1));

  const ParamVector radial_phi{3.0, 4.0};
  const TaskSet radial = synthetic_radial_tasks();
  out.push_back(ratio_check("taylor/radial/T=1/K=2", radial_phi, first_task(radial), 2));
  out.push_back(ratio_check("taylor/radial/T=3/K=2", radial_phi, radial, 2));
  out.push_back(ratio_check("taylor/radial/T=3/K=3", radial_phi, radial, 3));
}

CheckResult oracle_check(std::string name, const ParamVector& phi, const TaskSet& tasks, const RunConfig& cfg,
                         std::uint64_t stream) {
  const TaskSampler sampler = TaskSampler::uniform(tasks.size());
  const ExpectationEstimate exact = expected_meta_gradient_exact(phi, tasks, sampler, cfg);
  const ExpectationEstimate mc =
      expected_meta_gradient_mc(phi, tasks, sampler, cfg, kOracleSamples, RandomSource(kVerifySeed, stream));
  bool ok = std::abs(exact.weight_sum - 1.0) <= 1e-12;
  Json coords = Json::array();
  for (std::size_t d = 0; d < phi.dim(); ++d) {
    const double diff = std::abs(mc.value[d] - exact.value[d]);
    const double se = (*mc.standard_error)[d];
    const double bound = kOracleStandardErrors * se + kOracleFloor;
    ok = ok && diff <= bound;
    coords.push_back({{"exact", exact.value[d]},
                      {"monte_carlo", mc.value[d]},
                      {"standard_error", se},
                      {"abs_difference", diff},
                      {"z", se > 0.0 ? Json(diff / se) : Json(nullptr)}});
  }
  Json measured{{"samples", kOracleSamples},
                {"sequences", exact.count},
                {"weight_sum", exact.weight_sum},
                {"coordinates", coords}};
  return {std::move(name), ok, measured, "|MC - exact| <= 4 SE + 1e-12 per coordinate; weights sum to 1 within 1e-12"};
}

void oracle_suite(std::vector<CheckResult>& out) {
  RunConfig cfg;
  cfg.inner_lr = 0.1;
  cfg.inner_steps = 3;
  const ParamVector phi{0.3, 0.7};
  out.push_back(oracle_check("oracle/quad2/K=3", phi, quad_tasks("quad2"), cfg, 1));
  out.push_back(oracle_check("oracle/quad3/K=3", phi, quad_tasks("quad3"), cfg, 2));
  RunConfig radial_cfg = cfg;
  radial_cfg.inner_lr = 0.5;
  out.push_back(oracle_check("oracle/synthetic3/K=3", ParamVector{20.0, 5.0}, synthetic_radial_tasks(), radial_cfg, 3));

  const TaskSet single = first_task(quad_tasks("quad2"));
  const ExpectationEstimate mc = expected_meta_gradient_mc(phi, single, TaskSampler::uniform(1), cfg, 100,
                                                           RandomSource(kVerifySeed, 4));
  const ExpectationEstimate exact = expected_meta_gradient_exact(phi, single, TaskSampler::uniform(1), cfg);
  bool ok = true;
  for (std::size_t d = 0; d < phi.dim(); ++d) {
    ok = ok && (*mc.standard_error)[d] == 0.0 && mc.value[d] == exact.value[d];
  }
  out.push_back({"oracle/single deterministic task",
                 ok,
                 {{"monte_carlo", mc.value.values()},
                  {"exact", exact.value.values()},
                  {"standard_error", mc.standard_error->values()}},
                 "standard error exactly 0 and value equal to the exact meta-gradient"});
}

ParamVector uniform_point(RandomSource& rng, double lo, double hi, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return ParamVector(std::move(v));
}

CheckResult gradcheck_family(std::string name, const TaskSet& tasks, double lo, double hi, std::size_t batch_size,
                             std::uint64_t stream) {
  RandomSource rng(kVerifySeed, stream);
  double worst = 0.0;
  for (std::size_t i = 0; i < kGradcheckPoints; ++i) {
    const Task& task = *tasks[i % tasks.size()];
    const ParamVector phi = uniform_point(rng, lo, hi, task.dim());
    const MiniBatch batch = sample_batch(task, batch_size, rng);
    worst = std::max(worst, relative_gradient_error(task, phi, batch));
  }
  return {std::move(name), worst <= kGradcheckTolerance, {{"points", kGradcheckPoints}, {"max_relative_error", worst}},
          "max relative error <= 1e-5"};
}

void gradcheck_suite(std::vector<CheckResult>& out) {
  out.push_back(gradcheck_family("gradcheck/radial", synthetic_radial_tasks(), -5.0, 25.0, 1, 11));
  out.push_back(gradcheck_family("gradcheck/quadratic", quad_tasks("quad3"), -3.0, 3.0, 1, 12));
  out.push_back(gradcheck_family("gradcheck/regression", build_tasks(preset_config("regress4").tasks), -3.0, 3.0, 16,
                                 13));

  // Closed-form surrogate gradient against central differences of the surrogate loss.
  const TaskSet quad3 = quad_tasks("quad3");
  RandomSource rng(kVerifySeed, 14);
  double worst = 0.0;
  for (std::size_t i = 0; i < kGradcheckPoints; ++i) {
    const ParamVector phi = uniform_point(rng, -3.0, 3.0, 2);
    std::vector<SequenceEntry> seq;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t t = static_cast<std::size_t>(rng.uniform_index(quad3.size()));
      seq.push_back({t, quad3[t]->full_batch()});
    }
    const double alpha = 0.1;
    const ParamVector closed = surrogate_objective(phi, quad3, seq, alpha).surrogate_gradient;
    const ParamVector numeric = finite_difference_gradient(
        [&](const ParamVector& x) { return surrogate_loss(x, quad3, seq, alpha); }, phi);
    worst = std::max(worst, l2_distance(closed, numeric) / std::max({norm(closed), norm(numeric), 1e-6}));
  }
  out.push_back({"gradcheck/surrogate closed form",
                 worst <= kGradcheckTolerance,
                 {{"points", kGradcheckPoints}, {"max_relative_error", worst}},
                 "max relative error <= 1e-5"});
}

}  // namespace

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

Json VerificationReport::to_json() const {
  Json checks_json = Json::array();
  for (const auto& c : checks) {
    checks_json.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"measured", c.measured}, {"tolerance", c.tolerance}});
  }
  return {{"suite", suite}, {"passed", passed()}, {"checks", checks_json}};
}

std::vector<std::string> verification_suites() { return {"taylor", "oracle", "gradcheck", "all"}; }

VerificationReport run_verification(std::string_view suite) {
  VerificationReport report{std::string(suite), {}};
  const bool all = suite == "all";
  if (!all && suite != "taylor" && suite != "oracle" && suite != "gradcheck") {
    throw UsageError("unknown verification suite '" + std::string(suite) +
                     "' (expected taylor, oracle, gradcheck or all)");
  }
  if (all || suite == "taylor") taylor_suite(report.checks);
  if (all || suite == "oracle") oracle_suite(report.checks);
  if (all || suite == "gradcheck") gradcheck_suite(report.checks);
  return report;
}

}  // namespace seqrep::harness
