#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfl/dynamics.hpp"
#include "sfl/errors.hpp"

namespace sfl {

enum class Family { AB, AM, BDF };

/// A variable-step multistep scheme over a window of M steps (M + 1 states).
///
/// Families follow the classical relations: AB has order p = M, AM has p = M + 1,
/// BDF has p = M with M <= 6.
struct VlmmScheme {
  Family family = Family::AB;
  int M = 1;
  int p = 1;
  bool implicit = false;

  static VlmmScheme make(Family family, int window);
  /// Parses names such as "ab2", "am3", "bdf4".
  static VlmmScheme parse(const std::string& name);
  std::string name() const;
};

/// Coefficients of one window, all indexed by node j = 0..M from oldest to the anchor.
///
/// The multistep relation reads
///   x_M + sum_{j<M} alpha_j x_j = h * sum_{j<=M} beta_j f(x_j)
/// with h the anchor step (the step that ends at x_M).
struct WindowCoefficients {
  Vector alpha;  // M entries, nodes 0..M-1; the anchor coefficient is the implicit 1
  Vector beta;   // M + 1 entries
  Vector lags;   // M + 1 backshift times tau_j in units of h; lags[M] == 0
  double condition = 0.0;  // condition number of the (equilibrated) order-condition system

  int window() const { return static_cast<int>(alpha.size()); }
  /// Backshift times for an anchor step h.
  Vector lags_for(double h) const { return h * lags; }
};

inline constexpr double kMaxOrderConditionNumber = 1e12;

/// Node positions s_j = (t_j - t_M) / h for a step-ratio vector of length M - 1.
///
/// zeta_i = h_i / h_{i-1} for consecutive window steps h_0 .. h_{M-1}, and h = h_{M-1}.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> window_nodes(int window, std::span<const double> zeta) {
  if (static_cast<int>(zeta.size()) != window - 1) {
    throw ValidationError("step-ratio vector must have M - 1 = " + std::to_string(window - 1) +
                          " entries");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes(window + 1);
  nodes[window] = Scalar(0);
  Scalar step = Scalar(1);  // h_{M-1} / h
  for (int j = window - 1; j >= 0; --j) {
    nodes[j] = nodes[j + 1] - step;
    if (j > 0) {
      const double ratio = zeta[j - 1];
      if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw ValidationError("step ratios must be positive and finite");
      }
      step /= Scalar(ratio);
    }
  }
  return nodes;
}

/// Coefficient solve in precision `Scalar`.
///
/// Solves the order conditions sum_j a_j q(s_j) = sum_j beta_j q'(s_j) for q = u^d, d <= p,
/// where u = s / span is the node coordinate scaled by the window span (so that every node
/// lies in [-1, 0]); beta is rescaled back to units of the anchor step afterwards.
template <typename Scalar>
void solve_coefficients(const VlmmScheme& scheme, std::span<const double> zeta,
                        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& alpha,
                        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta, double& condition) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::pow;

  const int m = scheme.M;
  const int p = scheme.p;
  const Vec s = window_nodes<Scalar>(m, zeta);
  const Scalar span = -s[0];
  const Vec u = s / span;

  // Unknown layout: free alphas first, then free betas.
  std::vector<int> alpha_nodes;
  std::vector<int> beta_nodes;
  int first_degree = 1;
  switch (scheme.family) {
    case Family::AB:
      for (int j = 0; j < m; ++j) beta_nodes.push_back(j);
      break;
    case Family::AM:
      for (int j = 0; j <= m; ++j) beta_nodes.push_back(j);
      break;
    case Family::BDF:
      for (int j = 0; j < m; ++j) alpha_nodes.push_back(j);
      beta_nodes.push_back(m);
      first_degree = 0;
      break;
  }
  const int unknowns = static_cast<int>(alpha_nodes.size() + beta_nodes.size());
  const int rows = p + 1 - first_degree;
  if (rows != unknowns) throw ConfigError("inconsistent scheme " + scheme.name());

  // Fixed part: the anchor coefficient 1, and alpha_{M-1} = -1 for Adams methods.
  Vec fixed_a = Vec::Zero(m + 1);
  fixed_a[m] = Scalar(1);
  if (scheme.family != Family::BDF) fixed_a[m - 1] = Scalar(-1);

  auto monomial = [](Scalar x, int d) { return d == 0 ? Scalar(1) : pow(x, d); };

  Mat system(rows, unknowns);
  Vec rhs(rows);
  for (int r = 0; r < rows; ++r) {
    const int d = first_degree + r;
    int c = 0;
    for (int j : alpha_nodes) system(r, c++) = monomial(u[j], d);
    for (int j : beta_nodes) system(r, c++) = d == 0 ? Scalar(0) : -Scalar(d) * monomial(u[j], d - 1);
    Scalar known = Scalar(0);
    for (int j = 0; j <= m; ++j) known += fixed_a[j] * monomial(u[j], d);
    rhs[r] = -known;
  }

  // Row equilibration leaves the solution unchanged and makes the condition estimate meaningful.
  for (int r = 0; r < rows; ++r) {
    const Scalar scale = system.row(r).cwiseAbs().maxCoeff();
    if (scale > Scalar(0)) {
      system.row(r) /= scale;
      rhs[r] /= scale;
    }
  }
  Eigen::JacobiSVD<Mat> svd(system);
  const Vec sv = svd.singularValues();
  const Scalar smallest = sv[sv.size() - 1];
  condition = smallest > Scalar(0) ? static_cast<double>(sv[0] / smallest)
                                   : std::numeric_limits<double>::infinity();
  if (!(condition <= kMaxOrderConditionNumber)) {
    throw NumericalError("order-condition system for " + scheme.name() +
                         " is ill-conditioned (condition " + std::to_string(condition) + ")");
  }
  const Vec solution = system.fullPivLu().solve(rhs);

  alpha = Vec::Zero(m);
  for (int j = 0; j < m; ++j) alpha[j] = fixed_a[j];
  beta = Vec::Zero(m + 1);
  int c = 0;
  for (int j : alpha_nodes) alpha[j] = solution[c++];
  // beta was solved against q'(u) = q'(s) * span; convert back to units of h.
  for (int j : beta_nodes) beta[j] = solution[c++] * span;
}

/// Coefficients alpha_j(zeta), beta_j(zeta) of `scheme` for the step-ratio vector `zeta`.
WindowCoefficients coefficients(const VlmmScheme& scheme, std::span<const double> zeta);

/// Relative residual of the polynomial exactness identity, maximized over degrees d <= degree.
double exactness_residual(const WindowCoefficients& coeffs, int degree);

/// Multistep label x_M + sum_{j<M} alpha_j x_j for the M + 1 window states (oldest first).
Vector apply_label_map(const WindowCoefficients& coeffs, std::span<const Vector> window_states);

/// Window states Phi^{-tau_j}(anchor) for j = 0..M on the exact trajectory.
std::vector<Vector> exact_window(const WindowCoefficients& coeffs, const ReferenceFlow& ref,
                                 const Vector& anchor_x, double h);

/// Residual L - h * sum_j beta_j field(x_j) for given window states.
Vector residual_on_window(const WindowCoefficients& coeffs, std::span<const Vector> window_states,
                          double h, const std::function<Vector(const Vector&)>& field);

/// Multistep residual L - h * sum_j beta_j f(x_j) on the exact trajectory through anchor_x.
Vector residual_ms(const VlmmScheme& scheme, const WindowCoefficients& coeffs,
                   const ReferenceFlow& ref, const Vector& anchor_x, double h,
                   std::span<const double> zeta);

struct LteProbeResult {
  std::vector<double> h_grid;
  std::vector<double> max_residual;  // max over probes of the residual norm, per h
  std::vector<double> rms_residual;  // root mean square over probes, per h
  double slope = 0.0;                // fitted on max_residual; NaN when exact
  double slope_stderr = 0.0;
  double rms_slope = 0.0;
  double c_lte = 0.0;                // exp(intercept) of the max-residual fit
  double c_lte_sup = 0.0;            // max over h of max_residual / h^{p+1}
  bool exact = false;                // every residual below the exactness floor
};

inline constexpr double kExactnessFloor = 1e-10;

/// Residual norms over probes for each h (max and root mean square); no slope fit.
LteProbeResult lte_residuals(const VlmmScheme& scheme, const ReferenceFlow& ref, const Matrix& anchors,
                             const std::vector<std::vector<double>>& zetas, std::span<const double> h_grid);

/// Log-log probe of the local truncation error over an h grid.
///
/// `anchors` holds one anchor state per row and `zetas` one step-ratio vector per anchor; each
/// probe keeps its window geometry fixed while h varies.
LteProbeResult lte_constant_probe(const VlmmScheme& scheme, const ReferenceFlow& ref,
                                  const Matrix& anchors, const std::vector<std::vector<double>>& zetas,
                                  std::span<const double> h_grid);

}  // namespace sfl
