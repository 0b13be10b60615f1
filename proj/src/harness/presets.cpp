#include "seqrep/harness/presets.hpp"

namespace seqrep::harness {
namespace {

OptimizerSpec optimizer(OptimizerKind kind, const RunConfig& base, double inner_lr) {
  OptimizerSpec spec{kind, base};
  spec.config.inner_lr = inner_lr;
  return spec;
}

ExperimentConfig synthetic3() {
  ExperimentConfig c;
  c.name = "synthetic3";
  c.tasks.family = TaskFamily::Radial;
  c.tasks.centers = {ParamVector{0.0, 10.0}, ParamVector{0.0, 0.0}, ParamVector{10.0, 0.0}};
  c.initial_point = ParamVector{20.0, 5.0};
  c.defaults.inner_lr = 0.005;
  c.defaults.outer_lr = 0.5;
  c.defaults.inner_steps = 10;
  c.defaults.outer_steps = 500;
  c.defaults.batch_size = 1;
  c.optimizers = {optimizer(OptimizerKind::Mtl, c.defaults, 0.005),
                  optimizer(OptimizerKind::PcGrad, c.defaults, 0.005),
                  optimizer(OptimizerKind::Reptile, c.defaults, 1.0),
                  optimizer(OptimizerKind::SeqReptile, c.defaults, 1.0)};
  c.metric_every = 10;
  c.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  c.grid = GridSpec{};
  return c;
}

ExperimentConfig quadratic(std::string name, std::vector<ParamVector> targets) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.tasks.family = TaskFamily::Quadratic;
  c.tasks.centers = std::move(targets);
  c.initial_point = ParamVector{0.3, 0.7};
  c.defaults.inner_lr = 0.1;
  c.defaults.outer_lr = 0.5;
  c.defaults.inner_steps = 10;
  c.defaults.outer_steps = 100;
  c.defaults.batch_size = 1;
  c.optimizers = {{OptimizerKind::Mtl, c.defaults},
                  {OptimizerKind::PcGrad, c.defaults},
                  {OptimizerKind::Reptile, c.defaults},
                  {OptimizerKind::SeqReptile, c.defaults}};
  c.metric_every = 10;
  c.seeds = {1, 2, 3};
  c.grid = GridSpec{{-2.0, 2.0, -2.0, 2.0}, 101, 101};
  return c;
}

ExperimentConfig regress4() {
  ExperimentConfig c;
  c.name = "regress4";
  c.tasks.family = TaskFamily::Regression;
  c.tasks.counts = {100, 400, 1600, 3200};
  c.tasks.dim = 2;
  c.tasks.noise = 0.1;
  c.tasks.data_seed = 2024;
  c.tasks.true_weights = {ParamVector{1.0, -1.0}, ParamVector{1.2, -0.8}, ParamVector{0.8, -1.2},
                          ParamVector{1.0, -0.5}};
  c.initial_point = ParamVector{0.0, 0.0};
  c.sampler.kind = SamplerKind::Counts;
  c.sampler.exponent = 0.2;
  c.defaults.inner_lr = 0.05;
  c.defaults.outer_lr = 0.5;
  c.defaults.inner_steps = 5;
  c.defaults.outer_steps = 200;
  c.defaults.batch_size = 16;
  c.optimizers = {{OptimizerKind::Mtl, c.defaults},
                  {OptimizerKind::PcGrad, c.defaults},
                  {OptimizerKind::Reptile, c.defaults},
                  {OptimizerKind::SeqReptile, c.defaults}};
  c.metric_every = 10;
  c.seeds = {1, 2};
  c.grid = GridSpec{{-1.0, 3.0, -3.0, 1.0}, 101, 101};
  return c;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
  return {
      {"synthetic3", "three radial wells at (0,10), (0,0), (10,0); start (20,5); all four optimizers, seeds 1-10"},
      {"quad2", "two quadratics with targets (1,0) and (-1,0); start (0.3,0.7)"},
      {"quad3", "three quadratics with targets (1,0), (-1,0), (0,2); start (0.3,0.7)"},
      {"regress4", "four noisy linear regressions with 100/400/1600/3200 instances, p_t ~ N_t^0.2"},
  };
}

bool is_preset(std::string_view name) {
  for (const auto& p : list_presets()) {
    if (p.name == name) return true;
  }
  return false;
}

ExperimentConfig preset_config(std::string_view name) {
  if (name == "synthetic3") return synthetic3();
  if (name == "quad2") return quadratic("quad2", {ParamVector{1.0, 0.0}, ParamVector{-1.0, 0.0}});
  if (name == "quad3") {
    return quadratic("quad3", {ParamVector{1.0, 0.0}, ParamVector{-1.0, 0.0}, ParamVector{0.0, 2.0}});
  }
  if (name == "regress4") return regress4();
  throw UsageError("unknown preset '" + std::string(name) + "'");
}

}  // namespace seqrep::harness
