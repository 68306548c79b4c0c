#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace svrank {

// Error taxonomy mirrors the CLI exit codes: usage/parameter -> 2,
// ingestion -> 3, numerical -> 4.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct unsupported_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct degenerate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Carries the best available estimate so callers can inspect a failed
// computation (e.g. a quadrature that hit its panel budget).
struct numerical_error : std::runtime_error {
  double best_estimate = std::numeric_limits<double>::quiet_NaN();
  double achieved_tol = std::numeric_limits<double>::quiet_NaN();

  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
  numerical_error(const std::string& msg, double best, double tol)
      : std::runtime_error(msg), best_estimate(best), achieved_tol(tol) {}
};

}  // namespace svrank
