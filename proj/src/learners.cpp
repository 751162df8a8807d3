#include "sfl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sfl {

Matrix KernelExpansionModel::predict(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) {
    throw ValidationError("model expects inputs of dimension " + std::to_string(input_dim()) +
                          ", got " + std::to_string(inputs.cols()));
  }
  if (inputs.rows() == 0) return Matrix(0, output_dim());
  return cross_gram(kernel, inputs, centers) * coefficients;
}

Vector KernelExpansionModel::predict_one(const Vector& input) const {
  return predict(input.transpose()).row(0).transpose();
}

Vector flow_input(const Vector& x, double h, std::span<const double> zeta, bool include_zeta) {
  const Eigen::Index extra = include_zeta ? static_cast<Eigen::Index>(zeta.size()) : 0;
  Vector z(x.size() + 1 + extra);
  z.head(x.size()) = x;
  z[x.size()] = h;
  for (Eigen::Index i = 0; i < extra; ++i) z[x.size() + 1 + i] = zeta[static_cast<std::size_t>(i)];
  return z;
}

FlowDesign flow_design(const Dataset& data, bool include_zeta, bool clean) {
  FlowDesign d;
  const auto n = static_cast<Eigen::Index>(data.windows.size());
  const Eigen::Index width = data.dim + 1 + (include_zeta ? data.M - 1 : 0);
  d.inputs.resize(n, width);
  d.targets.resize(n, data.dim);
  for (Eigen::Index k = 0; k < n; ++k) {
    const WindowSample& w = data.windows[static_cast<std::size_t>(k)];
    const auto& states = clean ? w.clean_states : w.window_states;
    d.inputs.row(k) = flow_input(states[states.size() - 2], w.h, w.zeta, include_zeta).transpose();
    d.targets.row(k) = states.back().transpose();
  }
  return d;
}

FlowSolver::FlowSolver(const Dataset& data, const KernelSpec& kernel, bool include_zeta)
    : design_(flow_design(data, include_zeta)), kernel_(kernel), include_zeta_(include_zeta), window_(data.M) {
  if (data.windows.empty()) throw ValidationError("fit_flow: empty dataset");
  kernel_.output_dim = data.dim;
  const double ell = static_cast<double>(design_.inputs.rows());
  solver_.compute(gram(kernel_, design_.inputs) / ell);
  design_.targets /= ell;
}

KernelExpansionModel FlowSolver::fit(const SpectralFilterSpec& filter) const {
  KernelExpansionModel model;
  model.kernel = kernel_;
  model.centers = design_.inputs;
  model.coefficients = solver_.solve(filter, design_.targets);
  model.input_kind = InputKind::FlowInput;
  model.include_zeta = include_zeta_;
  model.window = window_;
  return model;
}

KernelExpansionModel fit_flow(const Dataset& data, const KernelSpec& kernel,
                              const SpectralFilterSpec& filter, bool include_zeta) {
  return FlowSolver(data, kernel, include_zeta).fit(filter);
}

Matrix default_centers(const Dataset& data, int max_centers) {
  if (max_centers < 1) throw ValidationError("max_centers must be >= 1");
  // Distinct states are keyed by (trajectory, index within trajectory).
  std::map<std::pair<int, int>, Vector> states;
  for (const auto& w : data.windows) {
    for (std::size_t j = 0; j < w.window_states.size(); ++j) {
      states.emplace(std::make_pair(w.trajectory, w.start + static_cast<int>(j)), w.window_states[j]);
    }
  }
  const auto total = static_cast<Eigen::Index>(states.size());
  const Eigen::Index count = std::min<Eigen::Index>(total, max_centers);
  Matrix centers(count, data.dim);
  std::vector<const Vector*> ordered;
  ordered.reserve(states.size());
  for (const auto& [key, x] : states) ordered.push_back(&x);
  for (Eigen::Index i = 0; i < count; ++i) {
    centers.row(i) = ordered[static_cast<std::size_t>(i * total / count)]->transpose();
  }
  return centers;
}

ForcingMatrix build_forcing_matrix(const std::vector<std::vector<Vector>>& windows,
                                   const std::vector<double>& h_values,
                                   const std::vector<std::vector<double>>& zetas,
                                   const VlmmScheme& scheme, const KernelSpec& kernel,
                                   const Matrix& centers) {
  if (windows.empty()) throw ValidationError("forcing matrix needs at least one window");
  if (windows.size() != h_values.size() || windows.size() != zetas.size()) {
    throw ValidationError("forcing matrix inputs are not aligned");
  }
  if (centers.cols() != kernel.input_dim()) {
    throw ValidationError("centers do not match the kernel input dimension");
  }
  const auto rows = static_cast<Eigen::Index>(windows.size());
  const auto dim = windows.front().back().size();
  const int m = scheme.M;

  ForcingMatrix out;
  out.scheme = scheme.name();
  out.kernel = kernel;
  out.kernel.output_dim = static_cast<int>(dim);
  out.centers = centers;
  out.h_values = h_values;
  out.matrix = Matrix::Zero(rows, centers.rows());
  out.labels.resize(rows, dim);

  // weights(k, j) = h_k beta_j(zeta_k)
  Matrix weights(rows, m + 1);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const auto& states = windows[static_cast<std::size_t>(k)];
    if (static_cast<int>(states.size()) != m + 1) {
      throw ValidationError("window has " + std::to_string(states.size()) + " states, scheme " +
                            scheme.name() + " needs " + std::to_string(m + 1));
    }
    const WindowCoefficients c = coefficients(scheme, zetas[static_cast<std::size_t>(k)]);
    weights.row(k) = h_values[static_cast<std::size_t>(k)] * c.beta.transpose();
    out.labels.row(k) = apply_label_map(c, states).transpose();
  }
  Matrix node_states(rows, dim);
  for (int j = 0; j <= m; ++j) {
    if (weights.col(j).cwiseAbs().maxCoeff() == 0.0) continue;
    for (Eigen::Index k = 0; k < rows; ++k) {
      node_states.row(k) = windows[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)].transpose();
    }
    out.matrix += weights.col(j).asDiagonal() * cross_gram(kernel, node_states, centers);
  }
  return out;
}

ForcingMatrix build_forcing_matrix(const Dataset& data, const VlmmScheme& scheme,
                                   const KernelSpec& kernel, const Matrix& centers) {
  if (data.M != scheme.M) {
    throw ValidationError("dataset window size " + std::to_string(data.M) + " does not match scheme " +
                          scheme.name());
  }
  std::vector<std::vector<Vector>> windows;
  std::vector<double> h;
  std::vector<std::vector<double>> zetas;
  for (const auto& w : data.windows) {
    windows.push_back(w.window_states);
    h.push_back(w.h);
    zetas.push_back(w.zeta);
  }
  return build_forcing_matrix(windows, h, zetas, scheme, kernel, centers);
}

FieldSolver::FieldSolver(const ForcingMatrix& forcing) : forcing_(&forcing) {
  const double ell = static_cast<double>(forcing.samples());
  const Matrix& b = forcing.matrix;
  Matrix normal = (b.transpose() * b) / ell;
  // Symmetrize away the rounding asymmetry of the product.
  normal = 0.5 * (normal + normal.transpose()).eval();
  solver_.compute(normal);
  rhs_ = (b.transpose() * forcing.labels) / ell;
}

KernelExpansionModel FieldSolver::fit(const SpectralFilterSpec& filter) const {
  KernelExpansionModel model;
  model.kernel = forcing_->kernel;
  model.centers = forcing_->centers;
  model.coefficients = solver_.solve(filter, rhs_);
  model.input_kind = InputKind::StateInput;
  return model;
}

KernelExpansionModel fit_field(const ForcingMatrix& forcing, const SpectralFilterSpec& filter) {
  return FieldSolver(forcing).fit(filter);
}

KernelExpansionModel fit_field(const Dataset& data, const VlmmScheme& scheme,
                               const KernelSpec& kernel, const SpectralFilterSpec& filter,
                               const Matrix& centers) {
  if (data.windows.empty()) throw ValidationError("fit_field: empty dataset");
  const ForcingMatrix forcing = build_forcing_matrix(data, scheme, kernel, centers);
  return fit_field(forcing, filter);
}

ObservabilityReport observability_report(const ForcingMatrix& forcing) {
  if (forcing.matrix.size() == 0) throw ValidationError("observability report needs a nonempty matrix");
  const double ell = static_cast<double>(forcing.samples());
  Eigen::BDCSVD<Matrix> svd(forcing.matrix / std::sqrt(ell));
  const Vector& sv = svd.singularValues();
  ObservabilityReport report;
  const bool wide = forcing.matrix.rows() < forcing.matrix.cols();
  report.c_obs_hat = wide ? 0.0 : sv[sv.size() - 1];
  double h_mean = 0.0;
  for (double h : forcing.h_values) h_mean += h;
  h_mean /= static_cast<double>(forcing.h_values.size());
  report.c_obs_over_h = report.c_obs_hat / h_mean;
  const Eigen::Index head = std::min<Eigen::Index>(5, sv.size());
  for (Eigen::Index i = 0; i < head; ++i) report.spectrum_head.push_back(sv[i]);
  for (Eigen::Index i = sv.size() - head; i < sv.size(); ++i) report.spectrum_tail.push_back(sv[i]);
  if (wide) report.spectrum_tail.push_back(0.0);
  return report;
}

double field_rmse(const KernelExpansionModel& model, const VectorFieldSpec& system,
                  const Matrix& points) {
  if (points.rows() == 0) throw ValidationError("field_rmse needs at least one point");
  const Matrix pred = model.predict(points);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sum += (pred.row(i).transpose() - system.eval_f(points.row(i).transpose())).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(points.rows()));
}

Matrix box_grid(const Box& box, int per_axis) {
  if (per_axis < 1) throw ValidationError("box_grid needs at least one point per axis");
  const Eigen::Index dim = box.dim();
  Eigen::Index total = 1;
  for (Eigen::Index c = 0; c < dim; ++c) total *= per_axis;
  Matrix grid(total, dim);
  for (Eigen::Index i = 0; i < total; ++i) {
    Eigen::Index rest = i;
    for (Eigen::Index c = 0; c < dim; ++c) {
      const Eigen::Index k = rest % per_axis;
      rest /= per_axis;
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(k) / (per_axis - 1);
      grid(i, c) = box.lower[c] + t * (box.upper[c] - box.lower[c]);
    }
  }
  return grid;
}

}  // namespace sfl
