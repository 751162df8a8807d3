#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "sfl/dynamics.hpp"
#include "sfl/errors.hpp"

using namespace sfl;

namespace {

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

Vector random_in(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(box.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * u(rng);
  return x;
}

}  // namespace

TEST_CASE("benchmark fields") {
  const auto lin = make_benchmark("linear_2d", {{"A", {0, 1, -1, 0}}});
  CHECK((lin.eval_f(vec2(1, 0)) - vec2(0, -1)).norm() == 0.0);
  const auto vdp = make_benchmark("van_der_pol", {{"mu", {1.0}}});
  CHECK(vdp.eval_f(vec2(0, 0)).norm() == 0.0);
  CHECK((vdp.eval_f(vec2(2, 1)) - vec2(1, -5)).norm() < 1e-15);
  const auto duff = make_benchmark("duffing");
  CHECK((duff.eval_f(vec2(1, 1)) - vec2(1, -2.1)).norm() < 1e-15);
  const auto chain = make_benchmark("polynomial_chain", {{"degree", {4}}});
  CHECK(chain.dim == 4);
  CHECK(chain.eval_f(Vector::Zero(4))[0] == 1.0);

  const Vector x = vec2(0.3, -0.7);
  CHECK(vdp.eval_f(x) == vdp.eval_f(x));
  CHECK(vdp.domain_box.contains(vec2(0, 0)));
  CHECK_FALSE(vdp.domain_box.contains(vec2(10, 0)));
  const Box big = vdp.domain_box.scaled(2.0);
  CHECK(big.upper[0] == doctest::Approx(2.0 * vdp.domain_box.upper[0]));

  const auto boxed = make_benchmark("mass_spring", {{"box", {-3, 3, -2, 2}}});
  CHECK(boxed.domain_box.upper[0] == 3.0);
  CHECK(boxed.domain_box.lower[1] == -2.0);
}

TEST_CASE("benchmark errors") {
  CHECK_THROWS_AS(make_benchmark("lorenz"), ConfigError);
  CHECK_THROWS_AS(make_benchmark("van_der_pol", {{"mu", {std::nan("")}}}), ValidationError);
  CHECK_THROWS_AS(make_benchmark("van_der_pol", {{"nu", {1.0}}}), ConfigError);
  CHECK_THROWS_AS(make_benchmark("linear_2d", {{"A", {1, 2, 3}}}), ConfigError);
}

TEST_CASE("rotation closed form") {
  ReferenceFlow ref{make_benchmark("linear_2d")};
  const double quarter = std::acos(-1.0) / 2.0;
  CHECK((flow(ref, vec2(1, 0), quarter) - vec2(0, -1)).norm() < 1e-9);
  CHECK((flow_backward(ref, vec2(0, -1), quarter) - vec2(1, 0)).norm() < 1e-9);
}

TEST_CASE("matrix exponential oracle on an affine system") {
  const ParameterMap params{{"A", {-0.3, 1.2, -0.8, 0.1}}, {"b", {0.5, -0.25}}};
  ReferenceFlow ref{make_benchmark("linear_2d", params)};
  Eigen::Matrix3d aug = Eigen::Matrix3d::Zero();
  aug << -0.3, 1.2, 0.5, -0.8, 0.1, -0.25, 0, 0, 0;
  std::mt19937_64 rng(1);
  for (double h : {0.01, 0.1, 0.5, 1.0}) {
    const Vector x = random_in(ref.system.domain_box, rng);
    const Eigen::Matrix3d e = (aug * h).exp();
    const Vector expected = e.topLeftCorner(2, 2) * x + e.topRightCorner(2, 1);
    CHECK((flow(ref, x, h) - expected).norm() < 1e-9);
    CHECK((ref.system.exact_flow(x, h) - expected).norm() < 1e-12);
  }
}

TEST_CASE("semigroup and identity") {
  for (const std::string name : {"van_der_pol", "duffing", "mass_spring", "linear_2d"}) {
    ReferenceFlow ref{make_benchmark(name)};
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 0.25);
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_in(ref.system.domain_box, rng);
      const double s = u(rng), t = u(rng);
      const Vector composed = flow(ref, flow(ref, x, s), t);
      INFO(name);
      CHECK((composed - flow(ref, x, s + t)).norm() <= 10.0 * ref.tolerance * std::max(1.0, x.norm()));
    }
    const Vector x = random_in(ref.system.domain_box, rng);
    CHECK((flow(ref, x, 0.0) - x).norm() == 0.0);
    CHECK((flow_backward(ref, x, 0.0) - x).norm() == 0.0);
    const double h = 1e-6;
    CHECK((flow(ref, x, h) - x).norm() <= 1.01 * h * ref.system.eval_f(x).norm() + 1e-12);
  }
  ReferenceFlow ref{make_benchmark("van_der_pol")};
  CHECK((flow(ref, vec2(0.5, 0.5), 0.3) - flow(ref, flow(ref, vec2(0.5, 0.5), 0.1), 0.2)).norm() < 1e-11);
}

TEST_CASE("round trip and conserved energy") {
  ReferenceFlow vdp{make_benchmark("van_der_pol")};
  std::mt19937_64 rng(9);
  for (double tau : {0.05, 0.3, 1.0}) {
    const Vector x = random_in(vdp.system.domain_box, rng);
    CHECK((flow_backward(vdp, flow(vdp, x, tau), tau) - x).norm() < 1e-8);
  }
  ReferenceFlow spring{make_benchmark("mass_spring", {{"k", {1}}, {"m", {1}}, {"c", {0}}})};
  Vector x = vec2(0.8, -0.3);
  const double e0 = 0.5 * x.squaredNorm();
  double drift = 0.0;
  for (int i = 0; i < 100; ++i) {
    x = flow(spring, x, 0.1);
    drift = std::max(drift, std::abs(0.5 * x.squaredNorm() - e0));
  }
  CHECK(drift < 1e-8);
}

TEST_CASE("step underflow carries the failing state") {
  // x' = x^2 blows up at t = 1 from x = 1.
  ReferenceFlow ref{make_benchmark("polynomial_chain", {{"degree", {1}}})};
  ref.system.eval_f = [](const Vector& x) { return Vector(x.cwiseProduct(x)); };
  ref.max_steps = 20000;
  try {
    flow(ref, Vector::Constant(1, 1.0), 2.0);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(e.state().size() == 1);
    CHECK(std::abs(e.state()[0]) > 1.0);
  }
  CHECK_THROWS_AS(flow(ref, Vector::Constant(1, 1.0), -0.1), ValidationError);
}
