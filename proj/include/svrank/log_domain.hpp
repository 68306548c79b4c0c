#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "svrank/errors.hpp"

namespace svrank {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Natural log of a nonnegative quantity; -inf encodes zero.  Construction
// and arithmetic reject NaN so a LogMagnitude is always meaningful.
struct LogMagnitude {
  double log_value = kNegInf;

  static LogMagnitude zero() { return {}; }

  static LogMagnitude from_log(double lv) {
    if (std::isnan(lv)) throw parameter_error("LogMagnitude: NaN log value");
    return {lv};
  }

  static LogMagnitude from_value(double v) {
    if (std::isnan(v) || v < 0.0)
      throw parameter_error("LogMagnitude: value must be nonnegative");
    return {v == 0.0 ? kNegInf : std::log(v)};
  }

  bool is_zero() const { return log_value == kNegInf; }
  double value() const { return std::exp(log_value); }
};

// Add-in-log with exponent shifting.
inline LogMagnitude operator+(LogMagnitude a, LogMagnitude b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const double hi = std::max(a.log_value, b.log_value);
  const double lo = std::min(a.log_value, b.log_value);
  return LogMagnitude::from_log(hi + std::log1p(std::exp(lo - hi)));
}

inline LogMagnitude operator*(LogMagnitude a, LogMagnitude b) {
  if (a.is_zero() || b.is_zero()) return LogMagnitude::zero();
  return LogMagnitude::from_log(a.log_value + b.log_value);
}

inline LogMagnitude operator/(LogMagnitude a, LogMagnitude b) {
  if (b.is_zero()) throw numerical_error("LogMagnitude: division by zero");
  if (a.is_zero()) return LogMagnitude::zero();
  return LogMagnitude::from_log(a.log_value - b.log_value);
}

// Stable log(sum(exp(terms))) over raw log values.
inline double log_sum_exp(std::span<const double> terms) {
  double hi = kNegInf;
  for (double t : terms) hi = std::max(hi, t);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace svrank
