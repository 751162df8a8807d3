#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sfl {

/// Bad or inconsistent configuration (unknown names, infeasible specs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates an operation's precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: step underflow, ill-conditioned systems.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Eigen::VectorXd state = {})
      : std::runtime_error(what), state_(std::move(state)) {}

  /// State at which the failure happened (empty when not applicable).
  const Eigen::VectorXd& state() const noexcept { return state_; }

 private:
  Eigen::VectorXd state_;
};

/// Dataset generation failure (trajectory escape, short trajectories).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfl
