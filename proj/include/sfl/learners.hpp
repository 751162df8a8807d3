#pragma once

#include <string>
#include <vector>

#include "sfl/filters.hpp"
#include "sfl/kernels.hpp"
#include "sfl/sampling.hpp"
#include "sfl/vlmm.hpp"

namespace sfl {

enum class InputKind { FlowInput, StateInput };

/// Fitted kernel expansion x -> sum_i k(x, c_i) W_i.
struct KernelExpansionModel {
  KernelSpec kernel;
  Matrix centers;       // one center per row
  Matrix coefficients;  // n_centers x n_output
  InputKind input_kind = InputKind::StateInput;
  bool include_zeta = false;  // flow inputs only
  int window = 1;             // flow inputs only: M of the training windows
  std::string provenance;     // dataset hash

  Eigen::Index input_dim() const { return centers.cols(); }
  Eigen::Index output_dim() const { return coefficients.cols(); }
  /// Predictions for inputs stored one per row.
  Matrix predict(const Matrix& inputs) const;
  Vector predict_one(const Vector& input) const;
};

/// Flow regression design: inputs (x_{M-1}, h[, zeta]) and next-state targets x_M.
struct FlowDesign {
  Matrix inputs;
  Matrix targets;
};

/// Row (x, h[, zeta]) of a flow input.
Vector flow_input(const Vector& x, double h, std::span<const double> zeta, bool include_zeta);

FlowDesign flow_design(const Dataset& data, bool include_zeta, bool clean = false);

/// Shared eigendecomposition of K / l for fitting one flow design with several filters.
class FlowSolver {
 public:
  FlowSolver(const Dataset& data, const KernelSpec& kernel, bool include_zeta);
  KernelExpansionModel fit(const SpectralFilterSpec& filter) const;

 private:
  FlowDesign design_;
  KernelSpec kernel_;
  bool include_zeta_;
  int window_;
  SpectralSolver<Matrix> solver_;
};

/// Spectral-filter kernel regression in windowed flow space.
KernelExpansionModel fit_flow(const Dataset& data, const KernelSpec& kernel,
                              const SpectralFilterSpec& filter, bool include_zeta);

/// Empirical Koopman-lag forcing matrix and aligned multistep labels.
struct ForcingMatrix {
  Matrix matrix;  // n_windows x n_centers, shared by every output coordinate
  Matrix labels;  // n_windows x n
  std::vector<double> h_values;
  std::string scheme;
  KernelSpec kernel;
  Matrix centers;

  Eigen::Index samples() const { return matrix.rows(); }
};

/// Uniform stride subsample of at most `max_centers` distinct observed window states.
Matrix default_centers(const Dataset& data, int max_centers = 400);

/// Entry (k, i) = h_k sum_j beta_j(zeta_k) k(x_{k,j}, c_i), labels from the multistep label map.
ForcingMatrix build_forcing_matrix(const Dataset& data, const VlmmScheme& scheme,
                                   const KernelSpec& kernel, const Matrix& centers);

/// Same construction from explicit windows (states oldest first, one step-ratio vector each).
ForcingMatrix build_forcing_matrix(const std::vector<std::vector<Vector>>& windows,
                                   const std::vector<double>& h_values,
                                   const std::vector<std::vector<double>>& zetas,
                                   const VlmmScheme& scheme, const KernelSpec& kernel,
                                   const Matrix& centers);

/// Vector-field estimator from the filtered normal equations of B W = L.
KernelExpansionModel fit_field(const ForcingMatrix& forcing, const SpectralFilterSpec& filter);

KernelExpansionModel fit_field(const Dataset& data, const VlmmScheme& scheme,
                               const KernelSpec& kernel, const SpectralFilterSpec& filter,
                               const Matrix& centers);

/// Shared factorization of B^T B / l for sweeps over several filters.
class FieldSolver {
 public:
  explicit FieldSolver(const ForcingMatrix& forcing);
  KernelExpansionModel fit(const SpectralFilterSpec& filter) const;
  const ForcingMatrix& forcing() const { return *forcing_; }

 private:
  const ForcingMatrix* forcing_;
  SpectralSolver<Matrix> solver_;
  Matrix rhs_;
};

struct ObservabilityReport {
  double c_obs_hat = 0.0;              // smallest singular value of B / sqrt(l)
  double c_obs_over_h = 0.0;           // c_obs_hat divided by the mean anchor step
  std::vector<double> spectrum_head;   // largest singular values of B / sqrt(l)
  std::vector<double> spectrum_tail;   // smallest singular values of B / sqrt(l)
  double h_scaling_slope = std::numeric_limits<double>::quiet_NaN();  // filled by sweeps
};

/// Empirical observability proxy; zero when the matrix has fewer rows than columns.
ObservabilityReport observability_report(const ForcingMatrix& forcing);

/// Field RMSE sqrt(mean ||f_hat(x) - f(x)||^2) over the given points (one per row).
double field_rmse(const KernelExpansionModel& model, const VectorFieldSpec& system,
                  const Matrix& points);

/// Regular grid with `per_axis` points per coordinate spanning `box`.
Matrix box_grid(const Box& box, int per_axis);

}  // namespace sfl
