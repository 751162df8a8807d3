#include "sfl/vlmm.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "sfl/loglog.hpp"

namespace sfl {

VlmmScheme VlmmScheme::make(Family family, int window) {
  if (window < 1) throw ConfigError("scheme window size must be >= 1");
  VlmmScheme s;
  s.family = family;
  s.M = window;
  switch (family) {
    case Family::AB:
      s.p = window;
      s.implicit = false;
      break;
    case Family::AM:
      s.p = window + 1;
      s.implicit = true;
      break;
    case Family::BDF:
      if (window > 6) throw ConfigError("BDF is zero-stable only up to M = 6");
      s.p = window;
      s.implicit = true;
      break;
  }
  return s;
}

VlmmScheme VlmmScheme::parse(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto digits_at = [&](std::size_t pos) -> int {
    if (pos >= lower.size() || !std::all_of(lower.begin() + pos, lower.end(), ::isdigit)) {
      throw ConfigError("cannot parse scheme '" + name + "'");
    }
    return std::stoi(lower.substr(pos));
  };
  if (lower.rfind("bdf", 0) == 0) return make(Family::BDF, digits_at(3));
  if (lower.rfind("ab", 0) == 0) return make(Family::AB, digits_at(2));
  if (lower.rfind("am", 0) == 0) return make(Family::AM, digits_at(2));
  throw ConfigError("unknown scheme family in '" + name + "'");
}

std::string VlmmScheme::name() const {
  switch (family) {
    case Family::AB: return "ab" + std::to_string(M);
    case Family::AM: return "am" + std::to_string(M);
    case Family::BDF: return "bdf" + std::to_string(M);
  }
  return "?";
}

WindowCoefficients coefficients(const VlmmScheme& scheme, std::span<const double> zeta) {
  using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  LVec alpha;
  LVec beta;
  WindowCoefficients out;
  solve_coefficients<long double>(scheme, zeta, alpha, beta, out.condition);
  out.alpha = alpha.cast<double>();
  out.beta = beta.cast<double>();
  out.lags = -window_nodes<long double>(scheme.M, zeta).cast<double>();
  out.lags[scheme.M] = 0.0;
  return out;
}

double exactness_residual(const WindowCoefficients& coeffs, int degree) {
  const int m = coeffs.window();
  double worst = 0.0;
  for (int d = 0; d <= degree; ++d) {
    double value = 0.0;
    double scale = 0.0;
    for (int j = 0; j <= m; ++j) {
      const double s = -coeffs.lags[j];
      const double a = j == m ? 1.0 : coeffs.alpha[j];
      const double q = d == 0 ? 1.0 : std::pow(s, d);
      const double dq = d == 0 ? 0.0 : d * (d == 1 ? 1.0 : std::pow(s, d - 1));
      value += a * q - coeffs.beta[j] * dq;
      scale += std::abs(a * q) + std::abs(coeffs.beta[j] * dq);
    }
    worst = std::max(worst, std::abs(value) / std::max(scale, 1.0));
  }
  return worst;
}

Vector apply_label_map(const WindowCoefficients& coeffs, std::span<const Vector> window_states) {
  const int m = coeffs.window();
  if (static_cast<int>(window_states.size()) != m + 1) {
    throw ValidationError("label map needs M + 1 = " + std::to_string(m + 1) + " states, got " +
                          std::to_string(window_states.size()));
  }
  Vector label = window_states[m];
  for (int j = 0; j < m; ++j) {
    if (window_states[j].size() != label.size()) throw ValidationError("window state dimension mismatch");
    label += coeffs.alpha[j] * window_states[j];
  }
  return label;
}

std::vector<Vector> exact_window(const WindowCoefficients& coeffs, const ReferenceFlow& ref,
                                 const Vector& anchor_x, double h) {
  const int m = coeffs.window();
  std::vector<Vector> states(m + 1);
  states[m] = anchor_x;
  // Walk backwards node by node so each call integrates over a single step.
  for (int j = m - 1; j >= 0; --j) {
    states[j] = flow_backward(ref, states[j + 1], h * (coeffs.lags[j] - coeffs.lags[j + 1]));
  }
  return states;
}

Vector residual_ms(const VlmmScheme& scheme, const WindowCoefficients& coeffs,
                   const ReferenceFlow& ref, const Vector& anchor_x, double h,
                   std::span<const double> zeta) {
  if (static_cast<int>(zeta.size()) != scheme.M - 1 || coeffs.window() != scheme.M) {
    throw ValidationError("window geometry does not match scheme " + scheme.name());
  }
  const std::vector<Vector> states = exact_window(coeffs, ref, anchor_x, h);
  return residual_on_window(coeffs, states, h, ref.system.eval_f);
}

Vector residual_on_window(const WindowCoefficients& coeffs, std::span<const Vector> window_states,
                          double h, const std::function<Vector(const Vector&)>& field) {
  Vector r = apply_label_map(coeffs, window_states);
  for (int j = 0; j <= coeffs.window(); ++j) {
    if (coeffs.beta[j] != 0.0) r -= h * coeffs.beta[j] * field(window_states[j]);
  }
  return r;
}

LteProbeResult lte_residuals(const VlmmScheme& scheme, const ReferenceFlow& ref, const Matrix& anchors,
                             const std::vector<std::vector<double>>& zetas, std::span<const double> h_grid) {
  if (anchors.rows() == 0 || static_cast<std::size_t>(anchors.rows()) != zetas.size()) {
    throw ValidationError("LTE probe needs one step-ratio vector per anchor");
  }
  std::vector<WindowCoefficients> coeffs;
  coeffs.reserve(zetas.size());
  for (const auto& z : zetas) coeffs.push_back(coefficients(scheme, z));

  LteProbeResult out;
  out.h_grid.assign(h_grid.begin(), h_grid.end());
  for (double h : h_grid) {
    if (!(h > 0.0)) throw ValidationError("LTE probe steps must be positive");
    double worst = 0.0;
    double sum_sq = 0.0;
    for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
      const Vector r = residual_ms(scheme, coeffs[i], ref, anchors.row(i).transpose(), h, zetas[i]);
      worst = std::max(worst, r.norm());
      sum_sq += r.squaredNorm();
    }
    out.max_residual.push_back(worst);
    out.rms_residual.push_back(std::sqrt(sum_sq / static_cast<double>(anchors.rows())));
    out.c_lte_sup = std::max(out.c_lte_sup, worst / std::pow(h, scheme.p + 1));
  }

  out.exact = std::all_of(out.max_residual.begin(), out.max_residual.end(),
                          [](double r) { return r < kExactnessFloor; });
  return out;
}

LteProbeResult lte_constant_probe(const VlmmScheme& scheme, const ReferenceFlow& ref,
                                  const Matrix& anchors,
                                  const std::vector<std::vector<double>>& zetas,
                                  std::span<const double> h_grid) {
  if (h_grid.size() < 2) throw ValidationError("LTE probe needs at least two distinct h values");
  if (std::all_of(h_grid.begin(), h_grid.end(), [&](double h) { return h == h_grid.front(); })) {
    throw ValidationError("LTE probe h grid is degenerate");
  }
  LteProbeResult out = lte_residuals(scheme, ref, anchors, zetas, h_grid);
  if (out.exact) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    out.rms_slope = out.slope;
    out.c_lte = *std::max_element(out.max_residual.begin(), out.max_residual.end());
    return out;
  }
  if (h_grid.size() < 3) throw ValidationError("LTE slope fit needs at least three h values");
  const SlopeFit fit = fit_loglog_slope(out.h_grid, out.max_residual);
  out.slope = fit.slope;
  out.slope_stderr = fit.stderr_slope;
  out.c_lte = std::exp(fit.intercept);
  out.rms_slope = fit_loglog_slope(out.h_grid, out.rms_residual).slope;
  return out;
}

}  // namespace sfl
