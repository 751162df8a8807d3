#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sfl/errors.hpp"

namespace sfl {

enum class KernelFamily { GaussianRbf };

/// Scalar kernel on R^d; vector-valued outputs use it times the identity.
struct KernelSpec {
  KernelFamily family = KernelFamily::GaussianRbf;
  Eigen::VectorXd lengthscales;
  int output_dim = 1;

  Eigen::Index input_dim() const { return lengthscales.size(); }
  void validate() const;
};

inline void KernelSpec::validate() const {
  if (lengthscales.size() == 0) throw ValidationError("kernel needs at least one lengthscale");
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales[i] > 0.0) || !std::isfinite(lengthscales[i])) {
      throw ValidationError("kernel lengthscales must be positive and finite");
    }
  }
  if (output_dim < 1) throw ValidationError("kernel output_dim must be >= 1");
}

/// Cross-kernel matrix K(i, j) = k(a_i, b_j) for points stored one per row.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> cross_gram(
    const KernelSpec& spec, const Eigen::MatrixBase<DerivedA>& a,
    const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  spec.validate();
  if (a.cols() != spec.input_dim() || b.cols() != spec.input_dim()) {
    throw ValidationError("kernel input dimension mismatch: expected " +
                          std::to_string(spec.input_dim()));
  }
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> inv =
      spec.lengthscales.template cast<Scalar>().cwiseInverse().transpose().array();
  const Mat sa = (a.array().rowwise() * inv).matrix();
  const Mat sb = (b.array().rowwise() * inv).matrix();
  Mat k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < sb.rows(); ++j) {
    for (Eigen::Index i = 0; i < sa.rows(); ++i) {
      k(i, j) = std::exp(Scalar(-0.5) * (sa.row(i) - sb.row(j)).squaredNorm());
    }
  }
  return k;
}

/// Symmetric Gram matrix with an exact unit diagonal.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(
    const KernelSpec& spec, const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  spec.validate();
  if (points.cols() != spec.input_dim()) {
    throw ValidationError("kernel input dimension mismatch: expected " +
                          std::to_string(spec.input_dim()));
  }
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> inv =
      spec.lengthscales.template cast<Scalar>().cwiseInverse().transpose().array();
  const Mat s = (points.array().rowwise() * inv).matrix();
  const Eigen::Index n = s.rows();
  Mat k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = Scalar(1);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = std::exp(Scalar(-0.5) * (s.row(i) - s.row(j)).squaredNorm());
      k(j, i) = k(i, j);
    }
  }
  return k;
}

inline constexpr Eigen::Index kMedianSubsample = 1000;

/// Per-coordinate median of nonzero pairwise absolute differences.
///
/// Uses an evenly strided subsample of at most 1000 rows. A coordinate with no nonzero
/// difference gets lengthscale 1 and a warning on stderr.
Eigen::VectorXd median_heuristic(const Eigen::MatrixXd& points);

}  // namespace sfl
