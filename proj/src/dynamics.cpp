#include "sfl/dynamics.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "sfl/errors.hpp"

namespace sfl {

namespace {

constexpr int kAnalytic = 99;

using OdeState = std::vector<double>;

double param(const ParameterMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (it->second.size() != 1) throw ConfigError("parameter '" + key + "' expects one value");
  return it->second.front();
}

void check_params(const std::string& name, const ParameterMap& params,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, values] : params) {
    if (key != "box" && !allowed.count(key)) {
      throw ConfigError("benchmark '" + name + "' has no parameter '" + key + "'");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ValidationError("parameter '" + key + "' is not finite");
    }
  }
}

Box make_box(const ParameterMap& params, const Box& fallback) {
  auto it = params.find("box");
  if (it == params.end()) return fallback;
  const auto& v = it->second;
  if (v.size() != static_cast<std::size_t>(2 * fallback.dim())) {
    throw ConfigError("parameter 'box' expects " + std::to_string(2 * fallback.dim()) + " values");
  }
  Box box{Vector(fallback.dim()), Vector(fallback.dim())};
  for (Eigen::Index i = 0; i < fallback.dim(); ++i) {
    box.lower[i] = v[2 * i];
    box.upper[i] = v[2 * i + 1];
    if (!(box.lower[i] < box.upper[i])) throw ConfigError("parameter 'box' has an empty interval");
  }
  return box;
}

Box symmetric_box(std::initializer_list<double> half_widths) {
  Vector upper(static_cast<Eigen::Index>(half_widths.size()));
  Eigen::Index i = 0;
  for (double w : half_widths) upper[i++] = w;
  return Box{-upper, upper};
}

// Closed-form flow of x' = A x + b via the exponential of the augmented generator.
std::function<Vector(const Vector&, double)> affine_flow(const Matrix& a, const Vector& b) {
  const Eigen::Index n = a.rows();
  Matrix generator = Matrix::Zero(n + 1, n + 1);
  generator.topLeftCorner(n, n) = a;
  generator.topRightCorner(n, 1) = b;
  return [generator, n](const Vector& x, double t) -> Vector {
    Matrix propagator = (generator * t).exp();
    Vector lifted(n + 1);
    lifted << x, 1.0;
    return (propagator * lifted).head(n);
  };
}

// Integrates x' = sign * rhs(x, t0 + sign * s) for s in [0, span].
Vector integrate(const ReferenceFlow& ref, const Vector& x, double span, double t0, double sign) {
  namespace ode = boost::numeric::odeint;
  if (!(span >= 0.0) || !std::isfinite(span)) {
    throw ValidationError("flow horizon must be finite and nonnegative");
  }
  if (x.size() != ref.system.dim) throw ValidationError("state dimension mismatch in flow");
  if (span == 0.0) return x;

  const VectorFieldSpec& sys = ref.system;
  auto system = [&sys, t0, sign](const OdeState& s, OdeState& ds, double t) {
    Eigen::Map<const Vector> xs(s.data(), static_cast<Eigen::Index>(s.size()));
    Vector v = sys.rhs(xs, t0 + sign * t);
    ds.assign(v.data(), v.data() + v.size());
    if (sign < 0) {
      for (double& d : ds) d = -d;
    }
  };

  auto stepper = ode::make_controlled(ref.tolerance, ref.tolerance, ref.max_substep,
                                      ode::runge_kutta_fehlberg78<OdeState>());
  OdeState state(x.data(), x.data() + x.size());
  double t = 0.0;
  double dt = std::min(ref.max_substep, span);
  const double min_dt = 1e-14 * std::max(1.0, span);
  std::size_t steps = 0;
  while (t < span) {
    // Land exactly on the end point.
    const double remaining = span - t;
    bool last = false;
    if (dt >= remaining) {
      dt = remaining;
      last = true;
    }
    const double t_before = t;
    ode::controlled_step_result result = stepper.try_step(system, state, t, dt);
    if (result == ode::success) {
      if (last) t = span;
      if (++steps > ref.max_steps) {
        throw NumericalError("reference flow exceeded the substep budget",
                             Eigen::Map<Vector>(state.data(), x.size()));
      }
      for (double v : state) {
        if (!std::isfinite(v)) {
          throw NumericalError("reference flow produced a non-finite state",
                               Eigen::Map<Vector>(state.data(), x.size()));
        }
      }
    } else if (dt < min_dt) {
      std::ostringstream msg;
      msg << "reference flow step underflow at t=" << t_before;
      throw NumericalError(msg.str(), Eigen::Map<Vector>(state.data(), x.size()));
    }
  }
  return Eigen::Map<Vector>(state.data(), x.size());
}

}  // namespace

bool Box::contains(const Vector& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

Box Box::scaled(double factor) const {
  const Vector center = 0.5 * (lower + upper);
  const Vector half = 0.5 * (upper - lower) * factor;
  return Box{center - half, center + half};
}

Vector VectorFieldSpec::rhs(const Vector& x, double t) const {
  Vector v = eval_f(x);
  if (has_input()) v += eval_g(x) * input_signal(t);
  return v;
}

VectorFieldSpec make_benchmark(const std::string& name, const ParameterMap& params) {
  VectorFieldSpec spec;
  spec.name = name;
  spec.dim = 2;
  spec.smoothness_order = kAnalytic;

  if (name == "van_der_pol") {
    check_params(name, params, {"mu"});
    const double mu = param(params, "mu", 1.0);
    spec.eval_f = [mu](const Vector& x) {
      Vector v(2);
      v << x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0];
      return v;
    };
    spec.domain_box = make_box(params, symmetric_box({2.5, 3.5}));
  } else if (name == "duffing") {
    check_params(name, params, {"alpha", "beta", "delta"});
    const double alpha = param(params, "alpha", 1.0);
    const double beta = param(params, "beta", 1.0);
    const double delta = param(params, "delta", 0.1);
    spec.eval_f = [=](const Vector& x) {
      Vector v(2);
      v << x[1], -delta * x[1] - alpha * x[0] - beta * x[0] * x[0] * x[0];
      return v;
    };
    spec.domain_box = make_box(params, symmetric_box({2.0, 2.0}));
  } else if (name == "mass_spring") {
    check_params(name, params, {"k", "m", "c"});
    const double k = param(params, "k", 1.0);
    const double m = param(params, "m", 1.0);
    const double c = param(params, "c", 0.0);
    if (m <= 0.0) throw ValidationError("mass_spring: m must be positive");
    Matrix a(2, 2);
    a << 0.0, 1.0, -k / m, -c / m;
    spec.eval_f = [a](const Vector& x) -> Vector { return a * x; };
    spec.exact_flow = affine_flow(a, Vector::Zero(2));
    spec.domain_box = make_box(params, symmetric_box({1.0, 1.0}));
  } else if (name == "linear_2d") {
    check_params(name, params, {"A", "b"});
    Matrix a(2, 2);
    a << 0.0, 1.0, -1.0, 0.0;
    Vector b = Vector::Zero(2);
    if (auto it = params.find("A"); it != params.end()) {
      if (it->second.size() != 4) throw ConfigError("linear_2d: A expects 4 values");
      a << it->second[0], it->second[1], it->second[2], it->second[3];
    }
    if (auto it = params.find("b"); it != params.end()) {
      if (it->second.size() != 2) throw ConfigError("linear_2d: b expects 2 values");
      b << it->second[0], it->second[1];
    }
    spec.eval_f = [a, b](const Vector& x) -> Vector { return a * x + b; };
    spec.exact_flow = affine_flow(a, b);
    spec.domain_box = make_box(params, symmetric_box({1.0, 1.0}));
  } else if (name == "polynomial_chain") {
    check_params(name, params, {"degree"});
    const double degree = param(params, "degree", 3.0);
    if (degree < 1.0 || degree != std::floor(degree) || degree > 12.0) {
      throw ValidationError("polynomial_chain: degree must be an integer in [1, 12]");
    }
    const int n = static_cast<int>(degree);
    spec.dim = n;
    Matrix a = Matrix::Zero(n, n);
    for (int i = 1; i < n; ++i) a(i, i - 1) = 1.0;
    Vector b = Vector::Zero(n);
    b[0] = 1.0;
    spec.eval_f = [a, b](const Vector& x) -> Vector { return a * x + b; };
    spec.exact_flow = affine_flow(a, b);
    spec.domain_box = make_box(params, Box{Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)});
  } else {
    throw ConfigError("unknown benchmark '" + name + "'");
  }
  return spec;
}

Vector flow(const ReferenceFlow& ref, const Vector& x, double h, double t0) {
  return integrate(ref, x, h, t0, 1.0);
}

Vector flow_backward(const ReferenceFlow& ref, const Vector& x, double tau, double t0) {
  return integrate(ref, x, tau, t0, -1.0);
}

}  // namespace sfl
