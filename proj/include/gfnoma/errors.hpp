#pragma once

#include <stdexcept>
#include <string>

namespace gfnoma {

/// Malformed or infeasible configuration (parse or validation failure).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An optimization constraint cannot be met. `constraint()` names it ("C2", "C3", ...).
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string constraint, const std::string& what)
      : std::runtime_error(constraint + ": " + what), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// Adaptive quadrature hit its depth limit. Carries the best available estimate.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double best_estimate, double error_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

}  // namespace gfnoma
