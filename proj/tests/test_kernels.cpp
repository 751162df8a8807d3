#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sfl/kernels.hpp"

using namespace sfl;

namespace {

KernelSpec iso(Eigen::Index d, double s) {
  KernelSpec k;
  k.lengthscales = Eigen::VectorXd::Constant(d, s);
  return k;
}

double brute_median(const std::vector<double>& xs) {
  std::vector<double> d;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      if (xs[i] != xs[j]) d.push_back(std::abs(xs[i] - xs[j]));
    }
  }
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  return n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

}  // namespace

TEST_CASE("gram basics") {
  Eigen::MatrixXd one(1, 2);
  one << 0.3, -0.2;
  CHECK(gram(iso(2, 0.7), one)(0, 0) == 1.0);

  Eigen::MatrixXd twin(2, 2);
  twin << 1.0, 2.0, 1.0, 2.0;
  const Eigen::MatrixXd g = gram(iso(2, 0.5), twin);
  CHECK((g - Eigen::MatrixXd::Ones(2, 2)).norm() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues()[0] == doctest::Approx(0.0));

  Eigen::MatrixXd pair(2, 2);
  pair << 0.0, 0.0, 0.6, 0.8;
  CHECK(gram(iso(2, 1.0), pair)(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(std::exp(-0.5) == doctest::Approx(0.60653).epsilon(1e-5));

  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.7;
  CHECK(cross_gram(iso(1, 0.4), a, b)(0, 0) == doctest::Approx(std::exp(-1.7 * 1.7 / (2 * 0.16))).epsilon(1e-14));
}

TEST_CASE("cross gram consistency and decay") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd p(15, 3);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n(rng);
  KernelSpec k;
  k.lengthscales = (Eigen::VectorXd(3) << 0.5, 1.0, 2.0).finished();
  CHECK((cross_gram(k, p, p) - gram(k, p)).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd far = p.array() + 40.0;
  const Eigen::MatrixXd c = cross_gram(iso(3, 1.0), p, far);
  CHECK(c.maxCoeff() < 1e-80);

  // Anisotropic entries against the direct formula.
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd d = (p.row(i) - p.row(i + 5)).transpose().cwiseQuotient(k.lengthscales);
    CHECK(gram(k, p)(i, i + 5) == doctest::Approx(std::exp(-0.5 * d.squaredNorm())).epsilon(1e-14));
  }
  CHECK_THROWS_AS(cross_gram(k, p, Eigen::MatrixXd(2, 2)), ValidationError);
  CHECK_THROWS_AS(gram(iso(3, 0.0), p), ValidationError);
  CHECK_THROWS_AS(gram(iso(3, -1.0), p), ValidationError);
}

TEST_CASE("gram is symmetric PSD with unit diagonal") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> nd(1, 6), nn(2, 200);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = nd(rng), n = nn(rng);
    Eigen::MatrixXd p(n, d);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = g(rng);
    const Eigen::MatrixXd k = gram(iso(d, 0.8), p);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(k.diagonal().cwiseEqual(1.0).all());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-10 * ev.maxCoeff());
    CHECK(ev.maxCoeff() / n <= 1.0 + 1e-12);
  }
}

TEST_CASE("median heuristic") {
  Eigen::MatrixXd two(2, 1);
  two << 0.0, 1.0;
  CHECK(median_heuristic(two)[0] == 1.0);

  std::vector<double> xs;
  Eigen::MatrixXd line(11, 1);
  for (int i = 0; i <= 10; ++i) {
    line(i, 0) = i;
    xs.push_back(i);
  }
  CHECK(median_heuristic(line)[0] == brute_median(xs));
  CHECK(median_heuristic(line)[0] == 4.0);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 2.0);
  Eigen::MatrixXd cloud(60, 2);
  std::vector<double> col0, col1;
  for (int i = 0; i < 60; ++i) {
    cloud(i, 0) = g(rng);
    cloud(i, 1) = 5.0;
    col0.push_back(cloud(i, 0));
  }
  const Eigen::VectorXd m = median_heuristic(cloud);
  CHECK(m[0] == doctest::Approx(brute_median(col0)).epsilon(1e-15));
  CHECK(m[1] == 1.0);
  CHECK_THROWS_AS(median_heuristic(Eigen::MatrixXd(0, 2)), ValidationError);
}
