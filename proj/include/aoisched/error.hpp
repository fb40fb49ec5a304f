#pragma once

#include <stdexcept>
#include <string>

namespace aoisched {

/// Invalid input: bad geometry, malformed files, out-of-range parameters.
/// The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence, singular systems, non-finite values.
/// The CLI maps it to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : NumericError(what), iterations_(iterations), residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace aoisched
