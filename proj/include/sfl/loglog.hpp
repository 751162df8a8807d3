#pragma once

#include <span>

namespace sfl {

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;  // residual standard error of the slope
  double intercept = 0.0;     // in log space: log y = slope * log x + intercept
};

/// Ordinary least squares on (log x, log y). Needs at least 3 strictly positive pairs.
SlopeFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace sfl
