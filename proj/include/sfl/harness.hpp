#pragma once

#include <string>
#include <vector>

#include "sfl/config.hpp"
#include "sfl/loglog.hpp"

namespace sfl {

/// One (grid value, seed, series) cell of a sweep.
struct CellResult {
  std::string series;        // scheme name, or filter family in comparisons
  std::size_t grid_index = 0;
  double grid_value = 0.0;
  std::uint64_t seed = 0;
  double lambda = 0.0;       // 0 where no filter is involved
  double error = 0.0;        // quantity named by RateReport::error_kind
  double aux = 0.0;          // quantity named by RateReport::aux_kind
  double c_obs_hat = 0.0;
  double mean_h = 0.0;       // E[H] of the cell's sampled anchor steps
  double moment_2p2 = 0.0;   // E[H^{2p+2}] of the same steps
  long n_windows = 0;
};

/// Seed spread of one series at one grid value.
struct GridSummary {
  double grid_value = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct SlopeReport {
  std::string series;
  std::string quantity;
  std::vector<double> grid;
  std::vector<GridSummary> summary;
  bool fitted = false;  // false when the grid is degenerate or the data are exact
  SlopeFit fit{};
};

enum class ContractStatus { Pass, Fail, Skipped };

struct ContractResult {
  std::string name;
  ContractStatus status = ContractStatus::Skipped;
  std::string detail;
};

struct RateReport {
  std::string name;
  SweepKind sweep = SweepKind::LteSweep;
  std::string system;
  std::string scheme;
  int order_p = 1;
  std::string filter;
  LambdaMode lambda_mode = LambdaMode::Fixed;
  double noise_sigma = 0.0;
  double nominal_r = 1.0;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  std::string error_kind;
  std::string aux_kind;
  std::vector<std::string> notes;
  std::vector<CellResult> cells;
  std::vector<SlopeReport> slopes;
  std::vector<ContractResult> contracts;
  std::vector<std::string> flags;
  double runtime_seconds = 0.0;

  bool failed() const;
};

std::string to_string(ContractStatus status);

RateReport run_lte_sweep(const ExperimentConfig& config, unsigned jobs = 1);
RateReport run_h_sweep(const ExperimentConfig& config, unsigned jobs = 1);
RateReport run_ell_sweep(const ExperimentConfig& config, unsigned jobs = 1);
RateReport run_cobs_sweep(const ExperimentConfig& config, unsigned jobs = 1);
RateReport run_filter_comparison(const ExperimentConfig& config, unsigned jobs = 1);
/// Dispatches on config.sweep->kind.
RateReport run_sweep(const ExperimentConfig& config, unsigned jobs = 1);

/// Smallest singular value of B / sqrt(l) on a fixed window geometry, one value per h.
///
/// Anchors, step ratios and centers are drawn once from `seed`; window states come from exact
/// backward flows, so only h changes between grid points.
std::vector<double> fixed_geometry_cobs(const ExperimentConfig& config, std::span<const double> h_grid,
                                        int n_probes, int n_centers, std::uint64_t seed);

/// Mean, standard error and min/median/max of `values`.
GridSummary summarize(double grid_value, std::vector<double> values);

/// Byte-stable cell table: no timings or timestamps.
std::string cells_csv(const RateReport& report);
std::string report_json(const RateReport& report);
std::string plotdata_csv(const RateReport& report);
/// Writes <dir>/<name>.cells.csv, .report.json and .plotdata.csv.
void write_report_files(const RateReport& report, const std::string& dir);

}  // namespace sfl
