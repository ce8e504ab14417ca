#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dilute {

/// Invalid configuration or violated precondition on inputs (CLI exit code 1).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Argument outside the mathematical domain of a closed-form expression.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// File could not be read or written (CLI exit code 2).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solve hit max_iter before reaching its tolerance (CLI exit code 3).
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace dilute
