#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "sfl/dynamics.hpp"
#include "sfl/io.hpp"

namespace fs = std::filesystem;
using namespace sfl;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sfl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args, const fs::path& dir, const std::string& env = "") {
  const fs::path log = dir / "stdout.txt";
  const std::string cmd = env + " " + std::string(SFL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(log.string());
  return r;
}

fs::path put(const fs::path& dir, const std::string& name, const std::string& text) {
  write_file((dir / name).string(), text);
  return dir / name;
}

const std::string kFieldConfig = R"({
  "schema_version": 1, "name": "lin",
  "system": {"name": "linear_2d"},
  "sampling": {
    "design": {"kind": "iid_uniform_box", "box": [[-1.25, 1.25], [-1.25, 1.25]], "n_trajectories": 200},
    "steps": {"kind": "uniform_deterministic", "h_min": 0.05, "h_max": 0.05},
    "n_windows": 200
  },
  "scheme": "bdf2",
  "kernel": {"family": "gaussian_rbf", "lengthscales": 1.0},
  "filter": "tikhonov:1e-10",
  "learner": {"target": "field", "max_centers": 200},
  "seeds": [4]
})";

}  // namespace

TEST_CASE("usage and validation errors exit 2") {
  const fs::path dir = scratch("usage");
  CHECK(run("", dir).code != 0);
  CHECK(run("frobnicate", dir).code == 2);
  CHECK(run("simulate", dir).code == 2);
  CHECK(run("simulate " + (dir / "missing.json").string(), dir).code == 2);
  const fs::path bad = put(dir, "bad.json", R"({"schema_version": 1, "system": {"name": "linear_2d"}, "extra": 0})");
  const Run r = run("simulate " + bad.string(), dir);
  CHECK(r.code == 2);
  CHECK(r.out.find("extra") != std::string::npos);
  CHECK(run("coeffs bdf9", dir).code == 2);
}

TEST_CASE("generation errors exit 3") {
  const fs::path dir = scratch("gen");
  const fs::path cfg = put(dir, "short.json", R"({
    "schema_version": 1, "name": "short", "system": {"name": "van_der_pol"},
    "sampling": {"design": {"kind": "iid_uniform_box", "n_trajectories": 5, "states_per_trajectory": 3},
                 "steps": {"kind": "uniform_deterministic", "h_min": 0.1, "h_max": 0.1}, "n_windows": 5},
    "scheme": "bdf3"})");
  const Run r = run("simulate " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 3);
  CHECK(r.out.find("insufficient window length") != std::string::npos);
}

TEST_CASE("contract failures exit 4") {
  const fs::path dir = scratch("contract");
  // The full Van der Pol box with steps up to 0.05 is outside the asymptotic regime of AB2.
  const fs::path cfg = put(dir, "pre.json", R"({
    "schema_version": 1, "name": "pre", "system": {"name": "van_der_pol"},
    "sampling": {"steps": {"kind": "uniform_deterministic", "h_min": 0.05, "h_max": 0.05}},
    "scheme": "ab2",
    "sweep": {"kind": "lte_sweep", "grid": [0.05, 0.025, 0.01, 0.005], "n_probes": 20},
    "seeds": [1, 2, 3]})");
  const Run r = run("sweep " + cfg.string() + " --out " + dir.string(), dir);
  CHECK(r.code == 4);
  CHECK(r.out.find("FAILED") != std::string::npos);
  CHECK(fs::exists(dir / "pre.cells.csv"));
  CHECK(fs::exists(dir / "pre.report.json"));
  CHECK(fs::exists(dir / "pre.plotdata.csv"));
}

TEST_CASE("simulate, fit and predict") {
  const fs::path a = scratch("pipe_a");
  const fs::path b = scratch("pipe_b");
  const fs::path cfg = put(a, "lin.json", kFieldConfig);
  for (const fs::path& dir : {a, b}) {
    REQUIRE(run("simulate " + cfg.string() + " --out " + dir.string(), dir).code == 0);
    REQUIRE(run("fit " + cfg.string() + " " + (dir / "lin.dataset.csv").string() + " --out " + dir.string(), dir).code ==
            0);
  }
  CHECK(read_file((a / "lin.dataset.csv").string()) == read_file((b / "lin.dataset.csv").string()));
  CHECK(read_file((a / "lin.model.json").string()) == read_file((b / "lin.model.json").string()));
  CHECK(read_file((a / "lin.metrics.json").string()) == read_file((b / "lin.metrics.json").string()));
  CHECK(fs::exists(a / "lin.manifest.json"));

  std::string pts = "x0,x1\n";
  for (double u : {-0.8, -0.2, 0.3, 0.9}) {
    for (double v : {-0.7, 0.1, 0.6}) pts += format_double(u) + "," + format_double(v) + "\n";
  }
  const fs::path points = put(a, "points.csv", pts);
  const fs::path model = a / "lin.model.json";
  REQUIRE(run("predict " + model.string() + " " + points.string() + " --out " + (a / "pred.csv").string(), a).code == 0);
  std::vector<std::string> header;
  const Matrix pred = parse_points_csv(read_file((a / "pred.csv").string()), &header);
  CHECK(header == std::vector<std::string>{"x0", "x1", "y_0", "y_1"});
  REQUIRE(pred.rows() == 12);
  const VectorFieldSpec sys = make_benchmark("linear_2d");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    const Vector x = pred.row(i).head(2).transpose();
    worst = std::max(worst, (pred.row(i).tail(2).transpose() - sys.eval_f(x)).norm());
  }
  CHECK(worst < 2e-2);

  const Run stdout_run = run("predict " + model.string() + " " + points.string(), a);
  CHECK(stdout_run.out == read_file((a / "pred.csv").string()));

  const fs::path empty = put(a, "empty.csv", "");
  const Run e = run("predict " + model.string() + " " + empty.string(), a);
  CHECK(e.code == 0);
  CHECK(parse_points_csv(e.out).rows() == 0);

  const fs::path wide = put(a, "wide.csv", "x0,x1,x2\n1,2,3\n");
  CHECK(run("predict " + model.string() + " " + wide.string(), a).code == 2);
}

TEST_CASE("output directory precedence") {
  const fs::path dir = scratch("outdir");
  const fs::path cfg = put(dir, "lin.json", kFieldConfig);
  const fs::path env_dir = dir / "from_env";
  const fs::path flag_dir = dir / "from_flag";
  REQUIRE(run("simulate " + cfg.string(), dir, "SFL_OUTPUT_DIR=" + env_dir.string()).code == 0);
  CHECK(fs::exists(env_dir / "lin.dataset.csv"));
  REQUIRE(run("simulate " + cfg.string() + " --out " + flag_dir.string(), dir, "SFL_OUTPUT_DIR=" + env_dir.string())
              .code == 0);
  CHECK(fs::exists(flag_dir / "lin.dataset.csv"));
}

TEST_CASE("coefficient printout") {
  const fs::path dir = scratch("coeffs");
  const Run r = run("coeffs ab2 --zeta 2", dir);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"scheme\": \"ab2\"") != std::string::npos);
  const Run env = run("coeffs --envelope --lower 0.5 --upper 2 --per-axis 5", dir);
  REQUIRE(env.code == 0);
  CHECK(env.out == read_file(std::string(SFL_FIXTURE_DIR) + "/vlmm_envelope_v1.csv"));
}
