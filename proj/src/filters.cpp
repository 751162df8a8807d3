#include "sfl/filters.hpp"

#include <cstdio>
#include <sstream>

namespace sfl {

namespace {

double parse_number(const std::string& text, const std::string& whole) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse filter spec '" + whole + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

}  // namespace

double SpectralFilterSpec::qualification_nu() const {
  switch (family) {
    case FilterFamily::Tikhonov: return 1.0;
    case FilterFamily::IteratedTikhonov: return static_cast<double>(order_t);
    case FilterFamily::Landweber:
    case FilterFamily::Cutoff: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

void SpectralFilterSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("filter lambda must be positive");
  if (family == FilterFamily::IteratedTikhonov && order_t < 1) {
    throw ValidationError("iterated Tikhonov order must be >= 1");
  }
  if (family == FilterFamily::Landweber) {
    if (!(landweber_tau > 0.0)) throw ValidationError("Landweber step must be positive");
    // tau * kappa^2 == 1 is the boundary case where the iteration still contracts.
    if (landweber_tau * kappa_sq > 1.0) {
      throw ValidationError("Landweber step times kappa^2 exceeds 1; the iteration diverges");
    }
  }
}

SpectralFilterSpec SpectralFilterSpec::parse(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() < 2) throw ConfigError("cannot parse filter spec '" + text + "'");
  SpectralFilterSpec spec;
  const std::string& family = parts[0];
  if (family == "tikhonov" && parts.size() == 2) {
    spec.family = FilterFamily::Tikhonov;
    spec.lambda = parse_number(parts[1], text);
  } else if (family == "itik" && parts.size() == 3) {
    spec.family = FilterFamily::IteratedTikhonov;
    const double t = parse_number(parts[1], text);
    if (t < 1 || t != std::floor(t)) throw ConfigError("iterated Tikhonov order must be a positive integer");
    spec.order_t = static_cast<int>(t);
    spec.lambda = parse_number(parts[2], text);
  } else if (family == "landweber" && (parts.size() == 2 || parts.size() == 3)) {
    spec.family = FilterFamily::Landweber;
    spec.lambda = parse_number(parts[1], text);
    if (parts.size() == 3) spec.landweber_tau = parse_number(parts[2], text);
  } else if (family == "cutoff" && parts.size() == 2) {
    spec.family = FilterFamily::Cutoff;
    spec.lambda = parse_number(parts[1], text);
  } else {
    throw ConfigError("cannot parse filter spec '" + text + "'");
  }
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("filter spec '") + text + "': " + e.what());
  }
  return spec;
}

std::string SpectralFilterSpec::to_string() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", lambda);
  switch (family) {
    case FilterFamily::Tikhonov: return std::string("tikhonov:") + buf;
    case FilterFamily::IteratedTikhonov: return "itik:" + std::to_string(order_t) + ":" + buf;
    case FilterFamily::Landweber: {
      char tau[64];
      std::snprintf(tau, sizeof tau, "%.17g", landweber_tau);
      return std::string("landweber:") + buf + ":" + tau;
    }
    case FilterFamily::Cutoff: return std::string("cutoff:") + buf;
  }
  return "?";
}

std::vector<QualificationRow> qualification_check(const SpectralFilterSpec& spec,
                                                  const std::vector<double>& nu_grid,
                                                  const std::vector<double>& sigma_grid,
                                                  const std::vector<double>& lambda_grid) {
  if (nu_grid.empty() || sigma_grid.empty() || lambda_grid.empty()) {
    throw ValidationError("qualification grids must be nonempty");
  }
  for (double s : sigma_grid) {
    if (!(s > 0.0) || s > spec.kappa_sq) throw ValidationError("sigma grid must lie in (0, kappa^2]");
  }
  for (double l : lambda_grid) {
    if (!(l > 0.0) || l > 1.0) throw ValidationError("lambda grid must lie in (0, 1]");
  }
  for (double nu : nu_grid) {
    if (!(nu > 0.0)) throw ValidationError("nu grid must be positive");
  }

  std::vector<QualificationRow> rows;
  for (double nu : nu_grid) {
    QualificationRow row;
    row.nu = nu;
    row.within_qualification = nu <= spec.qualification_nu();
    for (double lambda : lambda_grid) {
      const SpectralFilterSpec f = spec.with_lambda(lambda);
      double sup = 0.0;
      for (double sigma : sigma_grid) {
        const double residual = std::abs(1.0 - sigma * filter_value<double>(f, sigma));
        sup = std::max(sup, residual * std::pow(sigma / lambda, nu));
      }
      row.gamma_per_lambda.push_back(sup);
      row.gamma_hat = std::max(row.gamma_hat, sup);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sfl
