#pragma once

#include <stdexcept>
#include <string>

namespace ehrse {

/// Invalid model data: wrong dimensions, non-PSD covariances, bad probabilities.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An action that violates the energy constraint 0 <= power <= available.
class ConstraintViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative routine did not reach its tolerance within the iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem, tagged with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ehrse
