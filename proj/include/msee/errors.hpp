#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace msee {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector lengths or grids.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition on user-supplied parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered while evaluating an operator.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t location)
      : Error(what + " (at index " + std::to_string(location) + ")"),
        location_(location) {}
  std::size_t location() const { return location_; }

 private:
  std::size_t location_;
};

/// An iterative solve stopped before reaching its tolerance.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> residuals,
                      std::size_t step = 0)
      : Error(what), residuals_(std::move(residuals)), step_(step) {}

  double last_residual() const {
    return residuals_.empty() ? 0.0 : residuals_.back();
  }
  const std::vector<double>& residuals() const { return residuals_; }
  std::size_t step() const { return step_; }

 private:
  std::vector<double> residuals_;
  std::size_t step_;
};

/// Rank-deficient least-squares design.
class RegressionError : public Error {
 public:
  using Error::Error;
};

}  // namespace msee
