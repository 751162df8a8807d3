#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfl/config.hpp"
#include "sfl/harness.hpp"
#include "sfl/io.hpp"
#include "sfl/learners.hpp"
#include "sfl/parallel.hpp"
#include "sfl/rng.hpp"

namespace {

using namespace sfl;
using Json = nlohmann::json;

constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitContract = 4;

std::string output_dir(const ExperimentConfig& config, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SFL_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

std::string path_in(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

int cmd_simulate(const std::string& config_path, const std::string& out_flag, long seed_flag, unsigned jobs) {
  const std::string text = read_file(config_path);
  const ExperimentConfig config = parse_config(text);
  const std::uint64_t seed = seed_flag >= 0 ? static_cast<std::uint64_t>(seed_flag) : config.seeds.front();
  const Dataset data = generate_dataset(config.reference(), config.sampling, seed, jobs);
  const std::string csv = dataset_csv(data);
  const std::string dir = output_dir(config, out_flag);

  DatasetManifest m;
  m.system = config.system_name;
  m.scheme = config.scheme.name();
  m.seed = seed;
  m.dim = data.dim;
  m.M = data.M;
  m.n_windows = data.windows.size();
  m.noise_sigma = data.noise_sigma;
  m.data_hash = fnv1a_hex(csv);
  m.mean_h = data.moment(1.0);
  m.moment_2p2 = data.moment(2.0 * config.scheme.p + 2.0);
  m.created_utc = utc_timestamp();

  write_file(path_in(dir, config.name + ".dataset.csv"), csv);
  write_file(path_in(dir, config.name + ".manifest.json"), manifest_json(m, text));
  std::printf("windows %zu  E[H] = %.6e  E[H^%d] = %.6e  hash %s\n", m.n_windows, m.mean_h, 2 * config.scheme.p + 2,
              m.moment_2p2, m.data_hash.c_str());
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& dataset_path, const std::string& out_flag) {
  const ExperimentConfig config = load_config(config_path);
  const std::string csv = read_file(dataset_path);
  Dataset data = parse_dataset_csv(csv);
  if (data.windows.empty()) throw ValidationError("dataset '" + dataset_path + "' has no windows");
  if (data.M != config.scheme.M) {
    throw ConfigError("dataset window M = " + std::to_string(data.M) + " does not match scheme " +
                      config.scheme.name());
  }
  const ReferenceFlow ref = config.reference();
  if (data.dim != ref.system.dim) throw ConfigError("dataset dimension does not match the configured system");
  const SpectralFilterSpec filter = config.filter;
  const std::string dir = output_dir(config, out_flag);

  const Matrix centers = default_centers(data, config.max_centers);
  Json metrics;
  KernelExpansionModel model;
  if (config.learner_target == ErrorTarget::Field) {
    const ForcingMatrix forcing = build_forcing_matrix(data, config.scheme, config.kernel.resolve(centers), centers);
    model = FieldSolver(forcing).fit(filter);
    const double ell = static_cast<double>(forcing.samples());
    const Matrix resid = forcing.matrix * model.coefficients - forcing.labels;
    metrics["train_label_rmse"] = std::sqrt(resid.rowwise().squaredNorm().sum() / ell);
    metrics["heldout_field_rmse"] = field_rmse(model, ref.system, box_grid(ref.system.domain_box, config.test_grid));
    metrics["c_obs_hat"] = observability_report(forcing).c_obs_hat;
  } else {
    const FlowDesign design = flow_design(data, config.kernel.include_zeta);
    model = fit_flow(data, config.kernel.resolve(design.inputs), filter, config.kernel.include_zeta);
    const Matrix train = model.predict(design.inputs) - design.targets;
    metrics["train_rmse"] = std::sqrt(train.rowwise().squaredNorm().mean());
    DatasetSpec spec = config.sampling;
    spec.n_windows = config.heldout;
    spec.noise_sigma = 0.0;
    const Dataset held = generate_dataset(ref, spec, child_seed(config.seeds.front(), 0, 13), 1);
    const FlowDesign hd = flow_design(held, config.kernel.include_zeta, true);
    metrics["heldout_flow_rmse"] = std::sqrt((model.predict(hd.inputs) - hd.targets).rowwise().squaredNorm().mean());
    const ForcingMatrix forcing = build_forcing_matrix(data, config.scheme, config.kernel.resolve(centers), centers);
    metrics["c_obs_hat"] = observability_report(forcing).c_obs_hat;
  }
  model.provenance = fnv1a_hex(csv);
  metrics["target"] = to_string(config.learner_target);
  metrics["scheme"] = config.scheme.name();
  metrics["filter"] = filter.to_string();
  metrics["lambda"] = filter.lambda;
  metrics["n_windows"] = data.windows.size();
  metrics["lengthscales"] = std::vector<double>(model.kernel.lengthscales.data(),
                                                model.kernel.lengthscales.data() + model.kernel.lengthscales.size());
  metrics["dataset_hash"] = model.provenance;

  write_file(path_in(dir, config.name + ".model.json"), model_json(model));
  write_file(path_in(dir, config.name + ".metrics.json"), metrics.dump(2) + "\n");
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_flag, unsigned jobs) {
  const ExperimentConfig config = load_config(config_path);
  if (!config.sweep) throw ConfigError("config '" + config_path + "' has no 'sweep' section");
  const RateReport report = run_sweep(config, jobs);
  write_report_files(report, output_dir(config, out_flag));
  for (const auto& s : report.slopes) {
    if (s.fitted) {
      std::printf("%-24s %-28s slope %+.4f +- %.4f\n", s.series.c_str(), s.quantity.c_str(), s.fit.slope,
                  s.fit.stderr_slope);
    }
  }
  for (const auto& c : report.contracts) {
    std::printf("%-8s %-22s %s\n", to_string(c.status).c_str(), c.name.c_str(), c.detail.c_str());
  }
  for (const auto& f : report.flags) std::printf("flag %s\n", f.c_str());
  std::printf("%s  (%.1f s)\n", report.failed() ? "FAILED" : "PASS", report.runtime_seconds);
  return report.failed() ? kExitContract : 0;
}

int cmd_predict(const std::string& model_path, const std::string& points_path, const std::string& out_path) {
  const KernelExpansionModel model = parse_model(read_file(model_path));
  std::vector<std::string> header;
  const Matrix points = parse_points_csv(read_file(points_path), &header);
  std::string out;
  if (header.empty()) {
    out = predictions_csv(Matrix(0, 0), Matrix(0, model.output_dim()), {});
  } else {
    if (static_cast<Eigen::Index>(header.size()) != model.input_dim()) {
      throw ValidationError("points have " + std::to_string(header.size()) + " columns, model expects " +
                            std::to_string(model.input_dim()));
    }
    out = predictions_csv(points, model.predict(points), header);
  }
  if (out_path.empty()) {
    std::cout << out;
  } else {
    write_file(out_path, out);
  }
  return 0;
}


int cmd_coeffs(const std::string& scheme_name, const std::vector<double>& zeta, bool envelope, double lower,
               double upper, int per_axis) {
  if (envelope) {
    if (!(lower > 0.0 && lower <= 1.0 && upper >= 1.0)) throw ValidationError("envelope needs 0 < lower <= 1 <= upper");
    if (per_axis < 2) throw ValidationError("envelope needs at least 2 ratios per axis");
    std::printf("scheme,ratio_lower,ratio_upper,per_axis,max_abs_alpha,max_abs_beta,max_condition\n");
    const std::vector<std::string> names{"ab1", "ab2", "ab3", "ab4", "am1", "am2", "am3", "bdf1",
                                         "bdf2", "bdf3", "bdf4", "bdf5", "bdf6"};
    for (const auto& name : names) {
      const VlmmScheme scheme = VlmmScheme::parse(name);
      const int axes = scheme.M - 1;
      double max_a = 0.0, max_b = 0.0, max_c = 0.0;
      long total = 1;
      for (int i = 0; i < axes; ++i) total *= per_axis;
      std::vector<double> z(static_cast<std::size_t>(axes));
      for (long k = 0; k < total; ++k) {
        long rest = k;
        for (int i = 0; i < axes; ++i) {
          const double u = static_cast<double>(rest % per_axis) / (per_axis - 1);
          rest /= per_axis;
          z[static_cast<std::size_t>(i)] = std::exp(std::log(lower) + u * (std::log(upper) - std::log(lower)));
        }
        const WindowCoefficients c = coefficients(scheme, z);
        max_a = std::max(max_a, c.alpha.cwiseAbs().maxCoeff());
        max_b = std::max(max_b, c.beta.cwiseAbs().maxCoeff());
        max_c = std::max(max_c, c.condition);
      }
      std::printf("%s,%s,%s,%d,%s,%s,%s\n", name.c_str(), format_double(lower).c_str(), format_double(upper).c_str(),
                  per_axis, format_double(max_a).c_str(), format_double(max_b).c_str(), format_double(max_c).c_str());
    }
    return 0;
  }
  const VlmmScheme scheme = VlmmScheme::parse(scheme_name);
  std::vector<double> z = zeta;
  if (z.empty()) z.assign(static_cast<std::size_t>(scheme.M - 1), 1.0);
  const WindowCoefficients c = coefficients(scheme, z);
  Json j;
  j["scheme"] = scheme.name();
  j["M"] = scheme.M;
  j["p"] = scheme.p;
  j["zeta"] = z;
  j["alpha"] = std::vector<double>(c.alpha.data(), c.alpha.data() + c.alpha.size());
  j["beta"] = std::vector<double>(c.beta.data(), c.beta.data() + c.beta.size());
  j["lags"] = std::vector<double>(c.lags.data(), c.lags.data() + c.lags.size());
  j["condition"] = c.condition;
  j["exactness_residual"] = exactness_residual(c, scheme.p);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow and vector-field learning from irregularly sampled trajectories"};
  app.require_subcommand(1);
  unsigned jobs = sfl::default_jobs();
  std::string out_dir;

  auto* simulate = app.add_subcommand("simulate", "Sample a dataset from a config");
  std::string config_path;
  long seed = -1;
  simulate->add_option("config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--seed", seed, "Override the first config seed");
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_option("--jobs", jobs, "Worker threads");

  auto* fit = app.add_subcommand("fit", "Fit a model to a dataset");
  std::string dataset_path;
  fit->add_option("config", config_path, "Experiment config (JSON)")->required();
  fit->add_option("dataset", dataset_path, "Dataset CSV written by simulate")->required();
  fit->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a rate or order sweep");
  sweep->add_option("config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--jobs", jobs, "Worker threads");

  auto* predict = app.add_subcommand("predict", "Evaluate a fitted model");
  std::string model_path, points_path, predict_out;
  predict->add_option("model", model_path, "Model JSON written by fit")->required();
  predict->add_option("points", points_path, "Points CSV with a header line")->required();
  predict->add_option("--out", predict_out, "Write predictions here instead of stdout");

  auto* coeffs = app.add_subcommand("coeffs", "Print multistep coefficients");
  std::string scheme_name = "bdf2";
  std::vector<double> zeta;
  bool envelope = false;
  double lower = 0.5, upper = 2.0;
  int per_axis = 5;
  coeffs->add_option("scheme", scheme_name, "Scheme such as ab2, am3, bdf4");
  coeffs->add_option("--zeta", zeta, "Step ratios zeta_1 .. zeta_{M-1}")->delimiter(',');
  coeffs->add_flag("--envelope", envelope, "Coefficient bounds of every scheme over a ratio grid");
  coeffs->add_option("--lower", lower, "Smallest step ratio for --envelope");
  coeffs->add_option("--upper", upper, "Largest step ratio for --envelope");
  coeffs->add_option("--per-axis", per_axis, "Ratios per axis for --envelope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (jobs == 0) jobs = 1;
    if (*simulate) return cmd_simulate(config_path, out_dir, seed, jobs);
    if (*fit) return cmd_fit(config_path, dataset_path, out_dir);
    if (*sweep) return cmd_sweep(config_path, out_dir, jobs);
    if (*predict) return cmd_predict(model_path, points_path, predict_out);
    if (*coeffs) return cmd_coeffs(scheme_name, zeta, envelope, lower, upper, per_axis);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitConfig;
  } catch (const GenerationError& e) {
    std::fprintf(stderr, "generation error: %s\n", e.what());
    return kExitGeneration;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitGeneration;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
