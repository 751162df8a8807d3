#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfl/errors.hpp"

namespace sfl {

enum class FilterFamily { Tikhonov, IteratedTikhonov, Landweber, Cutoff };

/// Spectral filter g_lambda on [0, kappa_sq].
struct SpectralFilterSpec {
  FilterFamily family = FilterFamily::Tikhonov;
  double lambda = 1e-3;
  int order_t = 1;             // iterated Tikhonov only
  double landweber_tau = 1.0;  // Landweber step
  double lipschitz_mu = 1.0;   // report label only
  double kappa_sq = 1.0;       // upper end of the filter domain

  /// Qualification: 1 for Tikhonov, t for iterated Tikhonov, +inf otherwise.
  double qualification_nu() const;
  double beta_exponent() const { return std::max(1.0, 2.0 * lipschitz_mu); }
  /// Landweber iteration count tied to lambda.
  long landweber_steps() const { return static_cast<long>(std::ceil(1.0 / lambda)); }
  void validate() const;

  /// Parses "tikhonov:1e-3", "itik:3:1e-3", "landweber:1e-2[:tau]", "cutoff:1e-4".
  static SpectralFilterSpec parse(const std::string& text);
  std::string to_string() const;

  SpectralFilterSpec with_lambda(double value) const {
    SpectralFilterSpec copy = *this;
    copy.lambda = value;
    return copy;
  }
};

/// Tikhonov lambda that reproduces Gaussian-process regression with noise variance `noise_variance`.
inline double gp_lambda(double noise_variance, double ell) { return noise_variance / ell; }

/// g_lambda(sigma) for sigma in [0, kappa_sq].
template <typename Scalar>
Scalar filter_value(const SpectralFilterSpec& spec, Scalar sigma) {
  using std::expm1;
  using std::log1p;
  const Scalar lambda = Scalar(spec.lambda);
  switch (spec.family) {
    case FilterFamily::Tikhonov:
      return Scalar(1) / (sigma + lambda);
    case FilterFamily::IteratedTikhonov: {
      // sum_{i=1}^t lambda^{i-1} / (sigma + lambda)^i, the t-fold iterated solve.
      const Scalar inv = Scalar(1) / (sigma + lambda);
      const Scalar q = lambda * inv;
      Scalar sum = Scalar(0);
      Scalar term = inv;
      for (int i = 0; i < spec.order_t; ++i) {
        sum += term;
        term *= q;
      }
      return sum;
    }
    case FilterFamily::Landweber: {
      const Scalar tau = Scalar(spec.landweber_tau);
      const Scalar m = Scalar(spec.landweber_steps());
      if (sigma == Scalar(0)) return m * tau;
      // (1 - (1 - tau sigma)^m) / sigma without cancellation for small sigma.
      return -expm1(m * log1p(-tau * sigma)) / sigma;
    }
    case FilterFamily::Cutoff:
      return sigma >= lambda && sigma > Scalar(0) ? Scalar(1) / sigma : Scalar(0);
  }
  return Scalar(0);
}

inline constexpr double kSymmetryTolerance = 1e-10;

/// Eigendecomposition of a symmetric PSD matrix, reusable across filters and lambdas.
///
/// Negative eigenvalues from rounding are clamped to zero.
template <typename MatrixType>
class SpectralSolver {
 public:
  using Scalar = typename MatrixType::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SpectralSolver() = default;
  template <typename Derived>
  explicit SpectralSolver(const Eigen::MatrixBase<Derived>& a) {
    compute(a);
  }

  template <typename Derived>
  SpectralSolver& compute(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) throw ValidationError("filter operand must be square");
    const Scalar scale = std::max(Scalar(1), a.rows() ? a.cwiseAbs().maxCoeff() : Scalar(0));
    if (a.rows() && (a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(kSymmetryTolerance) * scale) {
      throw ValidationError("filter operand is not symmetric");
    }
    if (a.rows() == 0) {
      vectors_ = Mat(0, 0);
      sigma_ = Vec(0);
      return *this;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(a.derived().eval());
    if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    sigma_ = eig.eigenvalues().cwiseMax(Scalar(0));
    vectors_ = eig.eigenvectors();
    return *this;
  }

  const Vec& eigenvalues() const { return sigma_; }
  const Mat& eigenvectors() const { return vectors_; }

  /// Filter weights g_lambda(sigma_i) for every eigenvalue.
  Vec filter_weights(const SpectralFilterSpec& spec) const {
    spec.validate();
    if (spec.family == FilterFamily::Landweber && sigma_.size() &&
        sigma_.maxCoeff() > Scalar(spec.kappa_sq) * (Scalar(1) + Scalar(1e-10))) {
      throw ValidationError("spectrum exceeds kappa^2; Landweber would diverge");
    }
    Vec g(sigma_.size());
    for (Eigen::Index i = 0; i < sigma_.size(); ++i) g[i] = filter_value<Scalar>(spec, sigma_[i]);
    return g;
  }

  /// V g(Sigma) V^T rhs.
  template <typename Derived>
  Mat solve(const SpectralFilterSpec& spec, const Eigen::MatrixBase<Derived>& rhs) const {
    if (rhs.rows() != vectors_.rows()) throw ValidationError("filter right-hand side row count mismatch");
    const Vec g = filter_weights(spec);
    return vectors_ * (g.asDiagonal() * (vectors_.transpose() * rhs));
  }

 private:
  Mat vectors_;
  Vec sigma_;
};

/// V g(Sigma) V^T rhs for a symmetric positive semidefinite matrix A = V Sigma V^T.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> apply_filter(
    const SpectralFilterSpec& spec, const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& rhs) {
  using Mat = Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  spec.validate();
  if (rhs.rows() != a.rows()) throw ValidationError("filter right-hand side row count mismatch");
  return SpectralSolver<Mat>(a).solve(spec, rhs);
}

struct QualificationRow {
  double nu = 0.0;
  double gamma_hat = 0.0;               // max over all grids
  std::vector<double> gamma_per_lambda;  // sup over sigma for each lambda
  bool within_qualification = false;     // nu <= qualification_nu
};

/// Empirical constants sup_sigma |1 - sigma g(sigma)| sigma^nu / lambda^nu on grids.
std::vector<QualificationRow> qualification_check(const SpectralFilterSpec& spec,
                                                  const std::vector<double>& nu_grid,
                                                  const std::vector<double>& sigma_grid,
                                                  const std::vector<double>& lambda_grid);

}  // namespace sfl
