#include "sfl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sfl {

namespace {

using Json = nlohmann::json;

void require_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
T get(const Json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

double positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("field '" + field + "' must be positive");
  return v;
}

Box parse_box(const Json& j, const std::string& where, Eigen::Index dim) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim) {
    throw ConfigError("field '" + where + "' must list " + std::to_string(dim) + " [lower, upper] pairs");
  }
  Box box{Vector(dim), Vector(dim)};
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Json& pair = j[static_cast<std::size_t>(i)];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ConfigError("field '" + where + "' must list [lower, upper] pairs");
    }
    box.lower[i] = pair[0].get<double>();
    box.upper[i] = pair[1].get<double>();
    if (!(box.lower[i] < box.upper[i])) throw ConfigError("field '" + where + "' has an empty interval");
  }
  return box;
}

StepLawKind parse_step_kind(const std::string& s) {
  if (s == "uniform_deterministic") return StepLawKind::UniformDeterministic;
  if (s == "log_uniform") return StepLawKind::LogUniform;
  if (s == "geometric_ramp") return StepLawKind::GeometricRamp;
  throw ConfigError("unknown step law kind '" + s + "'");
}

DesignLawKind parse_design_kind(const std::string& s) {
  if (s == "iid_uniform_box") return DesignLawKind::IidUniformBox;
  if (s == "trajectory_time_average") return DesignLawKind::TrajectoryTimeAverage;
  throw ConfigError("unknown design law kind '" + s + "'");
}

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "lte_sweep") return SweepKind::LteSweep;
  if (s == "h_sweep") return SweepKind::HSweep;
  if (s == "ell_sweep") return SweepKind::EllSweep;
  if (s == "cobs_sweep") return SweepKind::CobsSweep;
  if (s == "filter_comparison") return SweepKind::FilterComparison;
  throw ConfigError("unknown sweep kind '" + s + "'");
}

LambdaMode parse_lambda_mode(const std::string& s) {
  if (s == "fixed") return LambdaMode::Fixed;
  if (s == "gp") return LambdaMode::Gp;
  if (s == "oracle") return LambdaMode::Oracle;
  throw ConfigError("unknown lambda_mode '" + s + "'");
}

ErrorTarget parse_target(const std::string& s) {
  if (s == "flow") return ErrorTarget::Flow;
  if (s == "field") return ErrorTarget::Field;
  throw ConfigError("unknown target '" + s + "'");
}

void validate_grid(const std::vector<double>& grid, const std::string& field) {
  if (grid.size() < 4) throw ConfigError("field '" + field + "' needs at least 4 grid points");
  for (double v : grid) positive(v, field);
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  if (*hi < 10.0 * *lo * (1.0 - 1e-12)) throw ConfigError("field '" + field + "' must span at least one decade");
}

}  // namespace

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::LteSweep: return "lte_sweep";
    case SweepKind::HSweep: return "h_sweep";
    case SweepKind::EllSweep: return "ell_sweep";
    case SweepKind::CobsSweep: return "cobs_sweep";
    case SweepKind::FilterComparison: return "filter_comparison";
  }
  return "?";
}

std::string to_string(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::Fixed: return "fixed";
    case LambdaMode::Gp: return "gp";
    case LambdaMode::Oracle: return "oracle";
  }
  return "?";
}

std::string to_string(ErrorTarget target) { return target == ErrorTarget::Flow ? "flow" : "field"; }

KernelSpec KernelChoice::resolve(const Matrix& inputs) const {
  KernelSpec spec;
  switch (kind) {
    case Kind::Median:
      spec.lengthscales = median_heuristic(inputs);
      break;
    case Kind::Isotropic:
      spec.lengthscales = Vector::Constant(inputs.cols(), isotropic);
      break;
    case Kind::PerCoordinate:
      if (static_cast<Eigen::Index>(per_coordinate.size()) != inputs.cols()) {
        throw ConfigError("kernel lengthscales list has " + std::to_string(per_coordinate.size()) +
                          " entries, inputs have " + std::to_string(inputs.cols()) + " coordinates");
      }
      spec.lengthscales = Eigen::Map<const Vector>(per_coordinate.data(), inputs.cols());
      break;
  }
  spec.validate();
  return spec;
}

VectorFieldSpec ExperimentConfig::system() const { return make_benchmark(system_name, system_params); }

ReferenceFlow ExperimentConfig::reference() const {
  ReferenceFlow ref;
  ref.system = system();
  ref.tolerance = tolerance;
  ref.max_substep = max_substep;
  return ref;
}

ExperimentConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(root, "config",
               {"schema_version", "name", "system", "reference", "sampling", "scheme", "kernel",
                "filter", "learner", "sweep", "seeds", "output"});
  ExperimentConfig cfg;
  if (!root.contains("schema_version")) throw ConfigError("field 'schema_version' is required");
  cfg.schema_version = get<int>(root, "schema_version", "config", 0);
  if (cfg.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(cfg.schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  cfg.name = get<std::string>(root, "name", "config", cfg.name);

  if (root.contains("system")) {
    const Json& s = root["system"];
    require_keys(s, "system", {"name", "params"});
    cfg.system_name = get<std::string>(s, "name", "system", cfg.system_name);
    if (s.contains("params")) {
      require_keys(s["params"], "system.params", {"mu", "alpha", "beta", "delta", "k", "m", "c", "A", "b", "degree", "box"});
      for (const auto& item : s["params"].items()) {
        const Json& v = item.value();
        if (v.is_number()) {
          cfg.system_params[item.key()] = {v.get<double>()};
        } else if (v.is_array()) {
          std::vector<double> flat;
          for (const auto& e : v) {
            if (e.is_number()) {
              flat.push_back(e.get<double>());
            } else if (e.is_array()) {
              for (const auto& f : e) flat.push_back(f.get<double>());
            } else {
              throw ConfigError("field 'system.params." + item.key() + "' must be numeric");
            }
          }
          cfg.system_params[item.key()] = flat;
        } else {
          throw ConfigError("field 'system.params." + item.key() + "' must be numeric");
        }
      }
    }
  }
  const VectorFieldSpec system = cfg.system();

  if (root.contains("reference")) {
    const Json& r = root["reference"];
    require_keys(r, "reference", {"tolerance", "max_substep"});
    cfg.tolerance = positive(get<double>(r, "tolerance", "reference", cfg.tolerance), "reference.tolerance");
    cfg.max_substep = positive(get<double>(r, "max_substep", "reference", cfg.max_substep), "reference.max_substep");
  }

  if (root.contains("scheme")) {
    if (!root["scheme"].is_string()) throw ConfigError("field 'scheme' must be a string such as \"bdf2\"");
    cfg.scheme = VlmmScheme::parse(root["scheme"].get<std::string>());
  }

  DatasetSpec& ds = cfg.sampling;
  ds.design.box = system.domain_box;
  ds.design.n_trajectories = 100;
  ds.n_windows = 800;
  if (root.contains("sampling")) {
    const Json& s = root["sampling"];
    require_keys(s, "sampling", {"design", "steps", "n_windows", "noise_sigma"});
    if (s.contains("design")) {
      const Json& d = s["design"];
      require_keys(d, "sampling.design", {"kind", "box", "n_trajectories", "horizon", "states_per_trajectory"});
      ds.design.kind = parse_design_kind(get<std::string>(d, "kind", "sampling.design", "iid_uniform_box"));
      if (d.contains("box")) ds.design.box = parse_box(d["box"], "sampling.design.box", system.dim);
      ds.design.n_trajectories = get<int>(d, "n_trajectories", "sampling.design", ds.design.n_trajectories);
      ds.design.horizon = get<double>(d, "horizon", "sampling.design", 0.0);
      ds.design.states_per_trajectory = get<int>(d, "states_per_trajectory", "sampling.design", 0);
      if (ds.design.n_trajectories < 1) throw ConfigError("field 'sampling.design.n_trajectories' must be >= 1");
      if (!(ds.design.horizon >= 0.0)) throw ConfigError("field 'sampling.design.horizon' must be >= 0");
      if (ds.design.states_per_trajectory < 0) {
        throw ConfigError("field 'sampling.design.states_per_trajectory' must be >= 0");
      }
    }
    if (s.contains("steps")) {
      const Json& st = s["steps"];
      require_keys(st, "sampling.steps", {"kind", "h_min", "h_max", "ratio_bounds", "ramp_ratio"});
      ds.steps.kind = parse_step_kind(get<std::string>(st, "kind", "sampling.steps", "uniform_deterministic"));
      ds.steps.h_max = positive(get<double>(st, "h_max", "sampling.steps", ds.steps.h_max), "sampling.steps.h_max");
      ds.steps.h_min = positive(get<double>(st, "h_min", "sampling.steps", ds.steps.h_max), "sampling.steps.h_min");
      if (st.contains("ratio_bounds")) {
        const auto rb = get<std::vector<double>>(st, "ratio_bounds", "sampling.steps", {});
        if (rb.size() != 2) throw ConfigError("field 'sampling.steps.ratio_bounds' needs two values");
        ds.steps.ratio_lower = rb[0];
        ds.steps.ratio_upper = rb[1];
      }
      ds.steps.ramp_ratio = get<double>(st, "ramp_ratio", "sampling.steps", ds.steps.ramp_ratio);
      if (ds.steps.h_min > ds.steps.h_max) throw ConfigError("field 'sampling.steps.h_min' exceeds h_max");
      try {
        ds.steps.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("field 'sampling.steps': ") + e.what());
      }
    }
    ds.n_windows = get<int>(s, "n_windows", "sampling", ds.n_windows);
    if (ds.n_windows < 1) throw ConfigError("field 'sampling.n_windows' must be >= 1");
    ds.noise_sigma = get<double>(s, "noise_sigma", "sampling", 0.0);
    if (!(ds.noise_sigma >= 0.0)) throw ConfigError("field 'sampling.noise_sigma' must be >= 0");
  }
  ds.M = cfg.scheme.M;

  if (root.contains("kernel")) {
    const Json& k = root["kernel"];
    require_keys(k, "kernel", {"family", "lengthscales", "include_zeta"});
    if (get<std::string>(k, "family", "kernel", "gaussian_rbf") != "gaussian_rbf") {
      throw ConfigError("field 'kernel.family' must be \"gaussian_rbf\"");
    }
    if (k.contains("lengthscales")) {
      const Json& l = k["lengthscales"];
      if (l.is_string()) {
        if (l.get<std::string>() != "median") throw ConfigError("field 'kernel.lengthscales' must be \"median\", a number or a list");
        cfg.kernel.kind = KernelChoice::Kind::Median;
      } else if (l.is_number()) {
        cfg.kernel.kind = KernelChoice::Kind::Isotropic;
        cfg.kernel.isotropic = positive(l.get<double>(), "kernel.lengthscales");
      } else if (l.is_array()) {
        cfg.kernel.kind = KernelChoice::Kind::PerCoordinate;
        for (const auto& v : l) {
          if (!v.is_number()) throw ConfigError("field 'kernel.lengthscales' must be numeric");
          cfg.kernel.per_coordinate.push_back(positive(v.get<double>(), "kernel.lengthscales"));
        }
      } else {
        throw ConfigError("field 'kernel.lengthscales' must be \"median\", a number or a list");
      }
    }
    cfg.kernel.include_zeta = get<bool>(k, "include_zeta", "kernel", false);
  }

  if (root.contains("filter")) {
    if (!root["filter"].is_string()) throw ConfigError("field 'filter' must be a string such as \"tikhonov:1e-3\"");
    cfg.filter = SpectralFilterSpec::parse(root["filter"].get<std::string>());
  }

  if (root.contains("learner")) {
    const Json& l = root["learner"];
    require_keys(l, "learner", {"target", "max_centers", "test_grid", "heldout"});
    cfg.learner_target = parse_target(get<std::string>(l, "target", "learner", "field"));
    cfg.max_centers = get<int>(l, "max_centers", "learner", cfg.max_centers);
    cfg.test_grid = get<int>(l, "test_grid", "learner", cfg.test_grid);
    cfg.heldout = get<int>(l, "heldout", "learner", cfg.heldout);
    if (cfg.max_centers < 1 || cfg.test_grid < 1 || cfg.heldout < 1) {
      throw ConfigError("fields 'learner.max_centers', 'learner.test_grid', 'learner.heldout' must be >= 1");
    }
  }

  if (root.contains("seeds")) {
    cfg.seeds.clear();
    const Json& s = root["seeds"];
    if (!s.is_array() || s.empty()) throw ConfigError("field 'seeds' must be a nonempty list");
    for (const auto& v : s) {
      if (!v.is_number_integer()) throw ConfigError("field 'seeds' must hold integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (root.contains("sweep")) {
    const Json& s = root["sweep"];
    require_keys(s, "sweep", {"kind", "grid", "lambda_mode", "lambda_grid", "filters", "n_probes", "n_centers",
                              "heldout", "target", "nominal_r"});
    SweepSpec sw;
    if (!s.contains("kind")) throw ConfigError("field 'sweep.kind' is required");
    sw.kind = parse_sweep_kind(get<std::string>(s, "kind", "sweep", ""));
    sw.grid = get<std::vector<double>>(s, "grid", "sweep", {});
    validate_grid(sw.grid, "sweep.grid");
    sw.lambda_mode = parse_lambda_mode(get<std::string>(s, "lambda_mode", "sweep", "fixed"));
    sw.lambda_grid = get<std::vector<double>>(s, "lambda_grid", "sweep", {});
    for (double l : sw.lambda_grid) positive(l, "sweep.lambda_grid");
    if ((sw.lambda_mode == LambdaMode::Oracle || sw.kind == SweepKind::FilterComparison) && sw.lambda_grid.empty()) {
      throw ConfigError("field 'sweep.lambda_grid' is required for oracle lambda selection");
    }
    sw.filters = get<std::vector<std::string>>(s, "filters", "sweep", {});
    for (const auto& f : sw.filters) {
      if (f != "tikhonov" && f.rfind("itik:", 0) != 0 && f != "landweber" && f != "cutoff") {
        throw ConfigError("field 'sweep.filters' entry '" + f + "' must be tikhonov, itik:<t>, landweber or cutoff");
      }
    }
    if (sw.kind == SweepKind::FilterComparison && sw.filters.empty()) {
      throw ConfigError("field 'sweep.filters' is required for filter_comparison");
    }
    sw.n_probes = get<int>(s, "n_probes", "sweep", sw.n_probes);
    sw.n_centers = get<int>(s, "n_centers", "sweep", sw.n_centers);
    sw.heldout = get<int>(s, "heldout", "sweep", sw.heldout);
    sw.target = parse_target(get<std::string>(s, "target", "sweep", "flow"));
    sw.nominal_r = positive(get<double>(s, "nominal_r", "sweep", sw.nominal_r), "sweep.nominal_r");
    if (sw.n_probes < 1 || sw.n_centers < 1 || sw.heldout < 1) {
      throw ConfigError("fields 'sweep.n_probes', 'sweep.n_centers', 'sweep.heldout' must be >= 1");
    }
    if (cfg.seeds.size() < 3) throw ConfigError("sweeps need at least 3 seeds");
    cfg.sweep = sw;
  }

  if (root.contains("output")) {
    const Json& o = root["output"];
    require_keys(o, "output", {"dir"});
    cfg.output_dir = get<std::string>(o, "dir", "output", cfg.output_dir);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace sfl
