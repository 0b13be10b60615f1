#include "seqrep/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace seqrep::harness {
namespace {

/// Typed access to one JSON object that remembers its path and rejects unknown keys.
class Section {
 public:
  Section(const Json& json, std::string path) : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : json_.items()) {
      if (!allowed.contains(key)) throw ConfigError(field(key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return json_.contains(key) && !json_.at(key).is_null(); }
  const Json& raw(const std::string& key) const { return json_.at(key); }
  std::string field(const std::string& key) const { return path_ + "/" + key; }

  std::string string(const std::string& key) const {
    const Json& v = require(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(json_.at(key), field(key));
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    return static_cast<std::size_t>(as_unsigned(json_.at(key), field(key)));
  }

  std::uint64_t unsigned_value(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return as_unsigned(json_.at(key), field(key));
  }

  ParamVector vector(const std::string& key) const { return as_vector(require(key), field(key)); }

  std::vector<ParamVector> vectors(const std::string& key) const {
    const Json& v = require(key);
    if (!v.is_array() || v.empty()) throw ConfigError(field(key), "expected a non-empty array of vectors");
    std::vector<ParamVector> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_vector(v[i], field(key) + "/" + std::to_string(i)));
    return out;
  }

  static double as_number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where, "must be finite");
    return x;
  }

  static std::uint64_t as_unsigned(const Json& v, const std::string& where) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(where, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  static ParamVector as_vector(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where, "expected a non-empty array of numbers");
    std::vector<double> values;
    for (std::size_t i = 0; i < v.size(); ++i) values.push_back(as_number(v[i], where + "/" + std::to_string(i)));
    return ParamVector(std::move(values));
  }

 private:
  const Json& require(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "required");
    return json_.at(key);
  }

  const Json& json_;
  std::string path_;
};

TaskFamily parse_family(const std::string& name, const std::string& where) {
  if (name == "radial") return TaskFamily::Radial;
  if (name == "quadratic") return TaskFamily::Quadratic;
  if (name == "regression") return TaskFamily::Regression;
  throw ConfigError(where, "unknown task family '" + name + "' (expected radial, quadratic or regression)");
}

TaskSetSpec parse_tasks(const Json& json) {
  Section s(json, "/tasks");
  TaskSetSpec spec;
  spec.family = parse_family(s.string("family"), s.field("family"));
  switch (spec.family) {
    case TaskFamily::Radial:
      s.allow({"family", "centers", "amplitude", "rate"});
      spec.centers = s.vectors("centers");
      spec.amplitude = s.number("amplitude", spec.amplitude);
      spec.rate = s.number("rate", spec.rate);
      if (!(spec.amplitude > 0.0)) throw ConfigError(s.field("amplitude"), "must be positive");
      if (!(spec.rate > 0.0)) throw ConfigError(s.field("rate"), "must be positive");
      break;
    case TaskFamily::Quadratic:
      s.allow({"family", "targets"});
      spec.centers = s.vectors("targets");
      break;
    case TaskFamily::Regression: {
      s.allow({"family", "counts", "dim", "noise", "data_seed", "true_weights"});
      if (!s.has("counts") || !s.raw("counts").is_array() || s.raw("counts").empty()) {
        throw ConfigError(s.field("counts"), "expected a non-empty array of instance counts");
      }
      const Json& counts = s.raw("counts");
      for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto n = Section::as_unsigned(counts[i], s.field("counts") + "/" + std::to_string(i));
        if (n == 0) throw ConfigError(s.field("counts") + "/" + std::to_string(i), "must be at least 1");
        spec.counts.push_back(static_cast<std::size_t>(n));
      }
      spec.dim = s.count("dim", spec.dim);
      if (spec.dim == 0) throw ConfigError(s.field("dim"), "must be at least 1");
      spec.noise = s.number("noise", spec.noise);
      if (spec.noise < 0.0) throw ConfigError(s.field("noise"), "must be non-negative");
      spec.data_seed = s.unsigned_value("data_seed", spec.data_seed);
      if (s.has("true_weights")) {
        spec.true_weights = s.vectors("true_weights");
        if (spec.true_weights.size() != spec.counts.size()) {
          throw ConfigError(s.field("true_weights"), "needs one weight vector per task");
        }
      }
      break;
    }
  }
  const std::size_t dim = spec.parameter_dim();
  for (std::size_t i = 0; i < spec.centers.size(); ++i) {
    if (spec.centers[i].dim() != dim) {
      throw ConfigError(s.field(spec.family == TaskFamily::Radial ? "centers" : "targets") + "/" + std::to_string(i),
                        "dimension differs from the first entry");
    }
  }
  for (std::size_t i = 0; i < spec.true_weights.size(); ++i) {
    if (spec.true_weights[i].dim() != dim) {
      throw ConfigError(s.field("true_weights") + "/" + std::to_string(i), "dimension must equal dim");
    }
  }
  return spec;
}

SamplerSpec parse_sampler(const Json& json, std::size_t tasks) {
  Section s(json, "/sampler");
  SamplerSpec spec;
  const std::string kind = s.string("kind");
  if (kind == "uniform") {
    s.allow({"kind"});
    spec.kind = SamplerKind::Uniform;
  } else if (kind == "counts") {
    s.allow({"kind", "exponent", "counts"});
    spec.kind = SamplerKind::Counts;
    spec.exponent = s.number("exponent", spec.exponent);
    if (s.has("counts")) {
      const Json& counts = s.raw("counts");
      if (!counts.is_array()) throw ConfigError(s.field("counts"), "expected an array");
      for (std::size_t i = 0; i < counts.size(); ++i) {
        const auto n = Section::as_unsigned(counts[i], s.field("counts") + "/" + std::to_string(i));
        if (n == 0) throw ConfigError(s.field("counts") + "/" + std::to_string(i), "must be at least 1");
        spec.counts.push_back(static_cast<std::size_t>(n));
      }
      if (spec.counts.size() != tasks) throw ConfigError(s.field("counts"), "needs one count per task");
    }
  } else if (kind == "probabilities") {
    s.allow({"kind", "probabilities"});
    spec.kind = SamplerKind::Probabilities;
    const ParamVector probabilities = s.vector("probabilities");
    spec.probabilities.assign(probabilities.values().begin(), probabilities.values().end());
    if (spec.probabilities.size() != tasks) throw ConfigError(s.field("probabilities"), "needs one entry per task");
    double total = 0.0;
    for (double p : spec.probabilities) {
      if (!(p > 0.0)) throw ConfigError(s.field("probabilities"), "entries must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(s.field("probabilities"), "must sum to 1");
  } else {
    throw ConfigError(s.field("kind"), "unknown sampler kind '" + kind + "' (expected uniform, counts or probabilities)");
  }
  return spec;
}

void apply_run_fields(const Section& s, RunConfig& cfg) {
  cfg.inner_lr = s.number("inner_lr", cfg.inner_lr);
  cfg.outer_lr = s.number("outer_lr", cfg.outer_lr);
  cfg.inner_steps = s.count("inner_steps", cfg.inner_steps);
  cfg.outer_steps = s.count("outer_steps", cfg.outer_steps);
  cfg.batch_size = s.count("batch_size", cfg.batch_size);
  cfg.l2_coeff = s.number("l2_coeff", cfg.l2_coeff);
  if (s.has("l2_reference")) cfg.l2_reference = s.vector("l2_reference");
}

void validate_run(const RunConfig& cfg, const std::string& where, std::size_t dim) {
  try {
    cfg.validate();
  } catch (const UsageError& e) {
    throw ConfigError(where, e.what());
  }
  if (cfg.l2_reference && cfg.l2_reference->dim() != dim) {
    throw ConfigError(where + "/l2_reference", "dimension must match the task parameters");
  }
}

#define SEQREP_RUN_KEYS "inner_lr", "outer_lr", "inner_steps", "outer_steps", "batch_size", "l2_coeff", "l2_reference"

Json run_fields_json(const RunConfig& cfg) {
  Json j;
  j["inner_lr"] = cfg.inner_lr;
  j["outer_lr"] = cfg.outer_lr;
  j["inner_steps"] = cfg.inner_steps;
  j["outer_steps"] = cfg.outer_steps;
  j["batch_size"] = cfg.batch_size;
  j["l2_coeff"] = cfg.l2_coeff;
  if (cfg.l2_reference) j["l2_reference"] = cfg.l2_reference->values();
  return j;
}

Json vectors_json(const std::vector<ParamVector>& vs) {
  Json out = Json::array();
  for (const auto& v : vs) out.push_back(v.values());
  return out;
}

}  // namespace

std::string to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::Radial: return "radial";
    case TaskFamily::Quadratic: return "quadratic";
    case TaskFamily::Regression: return "regression";
  }
  return "unknown";
}

std::size_t TaskSetSpec::task_count() const {
  return family == TaskFamily::Regression ? counts.size() : centers.size();
}

std::size_t TaskSetSpec::parameter_dim() const {
  return family == TaskFamily::Regression ? dim : centers.front().dim();
}

ParamVector ExperimentConfig::resolved_initial_point() const {
  return initial_point ? *initial_point : ParamVector::zeros(tasks.parameter_dim());
}

ExperimentConfig parse_config(const Json& json) {
  Section root(json, "");
  root.allow({"name", "tasks", "initial_point", "sampler", "defaults", "optimizers", "metric_every", "seeds", "grid",
              "output_dir"});
  ExperimentConfig config;
  config.name = root.string("name");
  if (config.name.empty() || config.name.find_first_of("/\\") != std::string::npos || config.name == "." ||
      config.name == "..") {
    throw ConfigError("/name", "must be a non-empty plain file name");
  }
  if (!root.has("tasks")) throw ConfigError("/tasks", "required");
  config.tasks = parse_tasks(root.raw("tasks"));
  const std::size_t dim = config.tasks.parameter_dim();
  const std::size_t task_count = config.tasks.task_count();

  if (root.has("initial_point")) {
    config.initial_point = root.vector("initial_point");
    if (config.initial_point->dim() != dim) throw ConfigError("/initial_point", "dimension must match the tasks");
  }

  config.sampler = root.has("sampler") ? parse_sampler(root.raw("sampler"), task_count) : SamplerSpec{};
  if (config.sampler.kind == SamplerKind::Counts && config.sampler.counts.empty() &&
      config.tasks.family != TaskFamily::Regression) {
    throw ConfigError("/sampler/counts", "required unless the tasks are regression tasks");
  }

  if (root.has("defaults")) {
    Section d(root.raw("defaults"), "/defaults");
    d.allow({SEQREP_RUN_KEYS});
    apply_run_fields(d, config.defaults);
  }
  validate_run(config.defaults, "/defaults", dim);

  if (!root.has("optimizers") || !root.raw("optimizers").is_array() || root.raw("optimizers").empty()) {
    throw ConfigError("/optimizers", "expected a non-empty array");
  }
  const Json& optimizers = root.raw("optimizers");
  for (std::size_t i = 0; i < optimizers.size(); ++i) {
    const std::string where = "/optimizers/" + std::to_string(i);
    Section o(optimizers[i], where);
    o.allow({"kind", SEQREP_RUN_KEYS});
    OptimizerSpec spec{OptimizerKind::Mtl, config.defaults};
    try {
      spec.kind = parse_optimizer_kind(o.string("kind"));
    } catch (const ConfigError&) {
      throw;
    } catch (const UsageError& e) {
      throw ConfigError(where + "/kind", e.what());
    }
    apply_run_fields(o, spec.config);
    validate_run(spec.config, where, dim);
    if (spec.kind == OptimizerKind::PcGrad && task_count < 2) {
      throw ConfigError(where + "/kind", "pcgrad needs at least two tasks");
    }
    for (const auto& prior : config.optimizers) {
      if (prior.kind == spec.kind) throw ConfigError(where + "/kind", "optimizer listed twice");
    }
    config.optimizers.push_back(std::move(spec));
  }

  config.metric_every = root.count("metric_every", config.metric_every);
  if (config.metric_every == 0) throw ConfigError("/metric_every", "must be at least 1");

  if (!root.has("seeds") || !root.raw("seeds").is_array() || root.raw("seeds").empty()) {
    throw ConfigError("/seeds", "expected a non-empty array of seeds");
  }
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < root.raw("seeds").size(); ++i) {
    const auto seed = Section::as_unsigned(root.raw("seeds")[i], "/seeds/" + std::to_string(i));
    if (!seen.insert(seed).second) throw ConfigError("/seeds/" + std::to_string(i), "duplicate seed");
    config.seeds.push_back(seed);
  }

  if (root.has("grid")) {
    if (dim != 2) throw ConfigError("/grid", "loss grids need two-dimensional parameters");
    Section g(root.raw("grid"), "/grid");
    g.allow({"bounds", "resolution"});
    GridSpec grid;
    if (g.has("bounds")) {
      const ParamVector b = g.vector("bounds");
      if (b.dim() != 4) throw ConfigError("/grid/bounds", "expected [x_min, x_max, y_min, y_max]");
      grid.bounds = {b[0], b[1], b[2], b[3]};
      if (!(grid.bounds.x_max > grid.bounds.x_min) || !(grid.bounds.y_max > grid.bounds.y_min)) {
        throw ConfigError("/grid/bounds", "must have positive extent");
      }
    }
    if (g.has("resolution")) {
      const Json& r = g.raw("resolution");
      if (!r.is_array() || r.size() != 2) throw ConfigError("/grid/resolution", "expected [nx, ny]");
      grid.nx = static_cast<std::size_t>(Section::as_unsigned(r[0], "/grid/resolution/0"));
      grid.ny = static_cast<std::size_t>(Section::as_unsigned(r[1], "/grid/resolution/1"));
      if (grid.nx < 2 || grid.ny < 2) throw ConfigError("/grid/resolution", "at least 2 points per axis");
    }
    config.grid = grid;
  }

  if (root.has("output_dir")) config.output_dir = root.string("output_dir");
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  Json json;
  try {
    json = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  if (json.is_object() && json.contains("generator") && json.contains("config")) return parse_config(json["config"]);
  return parse_config(json);
}

Json to_json(const ExperimentConfig& config) {
  Json j;
  j["name"] = config.name;

  Json tasks;
  tasks["family"] = to_string(config.tasks.family);
  switch (config.tasks.family) {
    case TaskFamily::Radial:
      tasks["centers"] = vectors_json(config.tasks.centers);
      tasks["amplitude"] = config.tasks.amplitude;
      tasks["rate"] = config.tasks.rate;
      break;
    case TaskFamily::Quadratic:
      tasks["targets"] = vectors_json(config.tasks.centers);
      break;
    case TaskFamily::Regression:
      tasks["counts"] = config.tasks.counts;
      tasks["dim"] = config.tasks.dim;
      tasks["noise"] = config.tasks.noise;
      tasks["data_seed"] = config.tasks.data_seed;
      if (!config.tasks.true_weights.empty()) tasks["true_weights"] = vectors_json(config.tasks.true_weights);
      break;
  }
  j["tasks"] = std::move(tasks);
  j["initial_point"] = config.resolved_initial_point().values();

  Json sampler;
  switch (config.sampler.kind) {
    case SamplerKind::Uniform:
      sampler["kind"] = "uniform";
      break;
    case SamplerKind::Counts:
      sampler["kind"] = "counts";
      sampler["exponent"] = config.sampler.exponent;
      if (!config.sampler.counts.empty()) sampler["counts"] = config.sampler.counts;
      break;
    case SamplerKind::Probabilities:
      sampler["kind"] = "probabilities";
      sampler["probabilities"] = config.sampler.probabilities;
      break;
  }
  j["sampler"] = std::move(sampler);
  j["defaults"] = run_fields_json(config.defaults);

  Json optimizers = Json::array();
  for (const auto& o : config.optimizers) {
    Json entry;
    entry["kind"] = std::string(to_string(o.kind));
    entry.update(run_fields_json(o.config));
    optimizers.push_back(std::move(entry));
  }
  j["optimizers"] = std::move(optimizers);
  j["metric_every"] = config.metric_every;
  j["seeds"] = config.seeds;
  if (config.grid) {
    const auto& g = *config.grid;
    j["grid"] = {{"bounds", {g.bounds.x_min, g.bounds.x_max, g.bounds.y_min, g.bounds.y_max}},
                 {"resolution", {g.nx, g.ny}}};
  }
  return j;
}

TaskSet build_tasks(const TaskSetSpec& spec) {
  TaskSet tasks;
  switch (spec.family) {
    case TaskFamily::Radial:
      for (const auto& c : spec.centers) tasks.push_back(std::make_shared<RadialTask>(c, spec.amplitude, spec.rate));
      break;
    case TaskFamily::Quadratic:
      for (const auto& c : spec.centers) tasks.push_back(std::make_shared<QuadraticTask>(c));
      break;
    case TaskFamily::Regression: {
      // Weights and data come from separate streams so listing explicit
      // weights does not shift the generated instances.
      const RandomSource weights_root(spec.data_seed, 1);
      const RandomSource data_root(spec.data_seed, 2);
      for (std::size_t t = 0; t < spec.counts.size(); ++t) {
        RegressionSpec r;
        r.instances = spec.counts[t];
        r.noise = spec.noise;
        if (spec.true_weights.empty()) {
          RandomSource wr = weights_root.child(t);
          std::vector<double> w(spec.dim);
          for (double& x : w) x = wr.normal();
          r.true_weights = ParamVector(std::move(w));
        } else {
          r.true_weights = spec.true_weights[t];
        }
        RandomSource dr = data_root.child(t);
        tasks.push_back(make_regression_task(r, dr));
      }
      break;
    }
  }
  return tasks;
}

TaskSampler build_sampler(const ExperimentConfig& config) {
  const auto& s = config.sampler;
  switch (s.kind) {
    case SamplerKind::Uniform:
      return TaskSampler::uniform(config.tasks.task_count());
    case SamplerKind::Counts:
      return TaskSampler::from_counts(s.counts.empty() ? config.tasks.counts : s.counts, s.exponent);
    case SamplerKind::Probabilities:
      return TaskSampler::from_probabilities(s.probabilities);
  }
  throw UsageError("unknown sampler kind");
}

}  // namespace seqrep::harness
