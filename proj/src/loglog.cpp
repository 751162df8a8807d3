#include "sfl/loglog.hpp"

#include <cmath>

#include "sfl/errors.hpp"

namespace sfl {

SlopeFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("slope fit: xs and ys differ in length");
  if (xs.size() < 3) throw ValidationError("slope fit needs at least 3 points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw ValidationError("slope fit needs positive values");
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ys[i]) - my);
  }
  if (sxx == 0.0) throw ValidationError("slope fit: all x values coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = std::log(ys[i]) - (fit.intercept + fit.slope * std::log(xs[i]));
    rss += r * r;
  }
  fit.stderr_slope = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

}  // namespace sfl
