#include "sfl/kernels.hpp"

#include <algorithm>
#include <iostream>
#include <vector>

namespace sfl {

Eigen::VectorXd median_heuristic(const Eigen::MatrixXd& points) {
  if (points.rows() == 0 || points.cols() == 0) {
    throw ValidationError("median heuristic needs a nonempty point set");
  }
  const Eigen::Index n = std::min(points.rows(), kMedianSubsample);
  std::vector<Eigen::Index> rows(n);
  for (Eigen::Index i = 0; i < n; ++i) rows[i] = i * points.rows() / n;

  Eigen::VectorXd out(points.cols());
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    diffs.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = std::abs(points(rows[i], c) - points(rows[j], c));
        if (d > 0.0) diffs.push_back(d);
      }
    }
    if (diffs.empty()) {
      std::cerr << "warning: coordinate " << c << " is constant; lengthscale falls back to 1\n";
      out[c] = 1.0;
      continue;
    }
    const std::size_t mid = diffs.size() / 2;
    std::nth_element(diffs.begin(), diffs.begin() + mid, diffs.end());
    double median = diffs[mid];
    if (diffs.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(diffs.begin(), diffs.begin() + mid));
    }
    out[c] = median;
  }
  return out;
}

}  // namespace sfl
