#include <doctest.h>

#include <cmath>
#include <random>

#include "sfl/filters.hpp"

using namespace sfl;

namespace {

SpectralFilterSpec make(FilterFamily f, double lambda, int t = 1) {
  SpectralFilterSpec s;
  s.family = f;
  s.lambda = lambda;
  s.order_t = t;
  return s;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

}  // namespace

TEST_CASE("filter values") {
  CHECK(filter_value(make(FilterFamily::Tikhonov, 1.0), 1.0) == 0.5);
  for (double sigma : log_grid(1e-8, 1.0, 50)) {
    for (double lambda : {1e-6, 1e-3, 0.5}) {
      const double a = filter_value(make(FilterFamily::Tikhonov, lambda), sigma);
      const double b = filter_value(make(FilterFamily::IteratedTikhonov, lambda, 1), sigma);
      CHECK(std::abs(a - b) <= 1e-14 * a);
    }
  }
  // Landweber: m = 10 steps, sum of (1 - tau sigma)^i for i < m.
  const SpectralFilterSpec lw = make(FilterFamily::Landweber, 0.1);
  CHECK(lw.landweber_steps() == 10);
  CHECK(filter_value(lw, 0.0) == doctest::Approx(10.0).epsilon(1e-15));
  for (double sigma : {1e-12, 1e-3, 0.3, 0.9}) {
    double brute = 0.0;
    for (int i = 0; i < 10; ++i) brute += std::pow(1.0 - sigma, i);
    CHECK(filter_value(lw, sigma) == doctest::Approx(brute).epsilon(1e-12));
  }
  const SpectralFilterSpec one_step = make(FilterFamily::Landweber, 1.0);
  CHECK(filter_value(one_step, 0.37) == doctest::Approx(1.0).epsilon(1e-14));
  // Iterated Tikhonov matches t successive solves.
  const SpectralFilterSpec it3 = make(FilterFamily::IteratedTikhonov, 0.01, 3);
  double w = 0.0;
  const double sigma = 0.2;
  for (int i = 0; i < 3; ++i) w = (1.0 + 0.01 * w) / (sigma + 0.01);
  CHECK(filter_value(it3, sigma) == doctest::Approx(w).epsilon(1e-14));
  CHECK(filter_value(make(FilterFamily::Cutoff, 0.1), 0.05) == 0.0);
  CHECK(filter_value(make(FilterFamily::Cutoff, 0.1), 0.2) == doctest::Approx(5.0));
}

TEST_CASE("filter metadata and validation") {
  CHECK(make(FilterFamily::Tikhonov, 1e-3).qualification_nu() == 1.0);
  CHECK(make(FilterFamily::IteratedTikhonov, 1e-3, 4).qualification_nu() == 4.0);
  CHECK(std::isinf(make(FilterFamily::Landweber, 1e-3).qualification_nu()));
  SpectralFilterSpec s;
  CHECK(s.beta_exponent() == 2.0);
  s.lipschitz_mu = 0.25;
  CHECK(s.beta_exponent() == 1.0);
  CHECK_THROWS_AS(make(FilterFamily::Tikhonov, 0.0).validate(), ValidationError);
  CHECK_THROWS_AS(make(FilterFamily::Tikhonov, -1.0).validate(), ValidationError);
  SpectralFilterSpec lw = make(FilterFamily::Landweber, 0.1);
  lw.landweber_tau = 1.5;
  CHECK_THROWS_AS(lw.validate(), ValidationError);
  lw.landweber_tau = 1.0;
  CHECK_NOTHROW(lw.validate());

  CHECK(SpectralFilterSpec::parse("tikhonov:1e-3").lambda == 1e-3);
  const SpectralFilterSpec it = SpectralFilterSpec::parse("itik:3:1e-4");
  CHECK(it.family == FilterFamily::IteratedTikhonov);
  CHECK(it.order_t == 3);
  CHECK(SpectralFilterSpec::parse("landweber:1e-2:0.5").landweber_tau == 0.5);
  CHECK(SpectralFilterSpec::parse("cutoff:1e-4").family == FilterFamily::Cutoff);
  CHECK(SpectralFilterSpec::parse(it.to_string()).order_t == 3);
  CHECK_THROWS_AS(SpectralFilterSpec::parse("ridge:1"), ConfigError);
  CHECK_THROWS_AS(SpectralFilterSpec::parse("tikhonov:abc"), ConfigError);
  CHECK(gp_lambda(1e-4, 100.0) == doctest::Approx(1e-6));
}

TEST_CASE("monotone in lambda") {
  for (auto fam : {FilterFamily::Tikhonov, FilterFamily::IteratedTikhonov, FilterFamily::Cutoff}) {
    for (double sigma : log_grid(1e-6, 1.0, 20)) {
      double prev = std::numeric_limits<double>::infinity();
      for (double lambda : log_grid(1e-7, 1.0, 30)) {
        const double g = filter_value(make(fam, lambda, 3), sigma);
        CHECK(g <= prev * (1 + 1e-14));
        prev = g;
      }
    }
  }
}

TEST_CASE("spectral solves") {
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  const Eigen::MatrixXd x = apply_filter(make(FilterFamily::Tikhonov, 1.0), Eigen::MatrixXd::Identity(5, 5), b);
  CHECK((x - b / 2.0).norm() < 1e-15);
  CHECK(apply_filter(make(FilterFamily::Cutoff, 0.1), Eigen::MatrixXd::Zero(5, 5), b).norm() == 0.0);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd g(20, 20);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
  const Eigen::MatrixXd a = g * g.transpose() / 40.0;
  Eigen::MatrixXd rhs(20, 2);
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs.data()[i] = n(rng);
  for (double lambda : {1e-1, 1e-3, 1e-6}) {
    const Eigen::MatrixXd spectral = apply_filter(make(FilterFamily::Tikhonov, lambda), a, rhs);
    const Eigen::MatrixXd direct = (a + lambda * Eigen::MatrixXd::Identity(20, 20)).ldlt().solve(rhs);
    CHECK((spectral - direct).norm() / direct.norm() < 1e-8);
  }

  const Eigen::VectorXd d = (Eigen::VectorXd(4) << 0.0, 1e-4, 0.02, 0.7).finished();
  for (auto fam : {FilterFamily::Tikhonov, FilterFamily::IteratedTikhonov, FilterFamily::Landweber, FilterFamily::Cutoff}) {
    const SpectralFilterSpec s = make(fam, 1e-2, 2);
    const Eigen::MatrixXd out = apply_filter(s, Eigen::MatrixXd(d.asDiagonal()), Eigen::MatrixXd::Identity(4, 4));
    for (int i = 0; i < 4; ++i) CHECK(out(i, i) == doctest::Approx(filter_value(s, d[i])).epsilon(1e-13));
  }

  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS(apply_filter(make(FilterFamily::Tikhonov, 1.0), asym, Eigen::VectorXd::Ones(3)), ValidationError);
  CHECK_THROWS_AS(apply_filter(make(FilterFamily::Landweber, 0.1), Eigen::MatrixXd::Identity(3, 3) * 2.0,
                               Eigen::VectorXd::Ones(3)),
                  ValidationError);

  // Reusing one decomposition across filters matches fresh solves.
  const SpectralSolver<Eigen::MatrixXd> solver(a);
  for (double lambda : {1e-2, 1e-4}) {
    const auto s = make(FilterFamily::IteratedTikhonov, lambda, 3);
    CHECK((solver.solve(s, rhs) - apply_filter(s, a, rhs)).norm() < 1e-10 * apply_filter(s, a, rhs).norm());
  }
}

TEST_CASE("qualification") {
  const auto sigma = log_grid(1e-6, 1.0, 200);
  const std::vector<double> lambdas{1e-1, 1e-2, 1e-3};
  const auto tik = qualification_check(make(FilterFamily::Tikhonov, 1e-3), {0.5, 1.0, 2.0}, sigma, lambdas);
  REQUIRE(tik.size() == 3);
  CHECK(tik[0].gamma_hat <= 1.0);
  CHECK(tik[1].gamma_hat <= 1.0);
  CHECK(tik[1].within_qualification);
  CHECK_FALSE(tik[2].within_qualification);
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
    const double growth = tik[2].gamma_per_lambda[i + 1] / tik[2].gamma_per_lambda[i];
    CHECK(growth > 8.0);
    CHECK(growth < 12.0);
  }

  const auto cut = qualification_check(make(FilterFamily::Cutoff, 1e-3), {1.0, 2.0, 3.0, 4.0}, sigma, lambdas);
  for (const auto& row : cut) CHECK(row.gamma_hat <= 1.0);

  // Stable under grid refinement for every family within its qualification.
  const auto fine = log_grid(1e-6, 1.0, 2000);
  for (auto fam : {FilterFamily::Tikhonov, FilterFamily::IteratedTikhonov, FilterFamily::Landweber, FilterFamily::Cutoff}) {
    const auto spec = make(fam, 1e-3, 3);
    std::vector<double> nus{0.5, 1.0};
    if (spec.qualification_nu() >= 3.0) nus.push_back(3.0);
    const auto coarse = qualification_check(spec, nus, sigma, lambdas);
    const auto refined = qualification_check(spec, nus, fine, lambdas);
    for (std::size_t k = 0; k < nus.size(); ++k) {
      CHECK(std::isfinite(coarse[k].gamma_hat));
      CHECK(refined[k].gamma_hat <= 2.0 * coarse[k].gamma_hat);
      CHECK(coarse[k].gamma_hat <= 2.0 * refined[k].gamma_hat);
    }
  }
  CHECK_THROWS_AS(qualification_check(make(FilterFamily::Tikhonov, 1e-3), {1.0}, {2.0}, lambdas), ValidationError);
  CHECK_THROWS_AS(qualification_check(make(FilterFamily::Tikhonov, 1e-3), {1.0}, sigma, {}), ValidationError);
}
