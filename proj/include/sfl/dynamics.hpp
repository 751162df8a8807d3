#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sfl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box, one (lower, upper) pair per coordinate.
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& x) const;
  /// Box with the same center and every half-width multiplied by `factor`.
  Box scaled(double factor) const;
};

/// A benchmark dynamical system x' = f(x) + g(x) u(t).
struct VectorFieldSpec {
  std::string name;
  int dim = 0;
  std::function<Vector(const Vector&)> eval_f;
  std::function<Matrix(const Vector&)> eval_g;             // optional input channel
  std::function<Vector(double)> input_signal;              // optional u(t)
  Box domain_box;
  int smoothness_order = 0;
  /// Closed-form flow, present for systems that have one (linear_2d).
  std::function<Vector(const Vector&, double)> exact_flow;

  bool has_input() const { return eval_g && input_signal; }
  /// Right-hand side at time t, including the input channel when present.
  Vector rhs(const Vector& x, double t) const;
};

using ParameterMap = std::map<std::string, std::vector<double>>;

/// Builds one of the shipped benchmarks.
///
/// Known names and parameters (defaults in parentheses):
///   van_der_pol      mu (1)
///   duffing          alpha (1), beta (1), delta (0.1)   x1'' = -delta x1' - alpha x1 - beta x1^3
///   mass_spring      k (1), m (1), c (0)
///   linear_2d        A (4 entries, row major; default [[0,1],[-1,0]]), b (2 entries; default 0)
///   polynomial_chain degree (3): x1' = 1, x_{i+1}' = x_i, solutions are polynomials in t
/// Every benchmark also accepts `box` (2*dim entries, lower/upper interleaved per coordinate).
VectorFieldSpec make_benchmark(const std::string& name, const ParameterMap& params = {});

/// High-accuracy reference flow map built on an embedded Runge-Kutta-Fehlberg 7(8) pair.
struct ReferenceFlow {
  VectorFieldSpec system;
  double tolerance = 1e-12;
  double max_substep = 0.05;
  /// Maximum accepted substeps per call before declaring failure.
  std::size_t max_steps = 2000000;
};

/// Forward flow x -> Phi^h(x) for h >= 0, starting at absolute time t0 (used only by inputs).
Vector flow(const ReferenceFlow& ref, const Vector& x, double h, double t0 = 0.0);

/// Backward flow x -> Phi^{-tau}(x) for tau >= 0.
Vector flow_backward(const ReferenceFlow& ref, const Vector& x, double tau, double t0 = 0.0);

}  // namespace sfl
