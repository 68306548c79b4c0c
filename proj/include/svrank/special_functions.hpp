#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "svrank/errors.hpp"

namespace svrank {

// Regularized lower incomplete gamma P(a, x); series branch for x < a+1,
// Lentz continued fraction for the upper tail otherwise.
inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw parameter_error("gamma_p: a > 0 required");
  if (x < 0.0) throw parameter_error("gamma_p: x >= 0 required");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16)
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    throw numerical_error("gamma_p: series failed to converge");
  }
  // Continued fraction for Q(a, x).
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) {
      const double q = std::exp(-x + a * std::log(x) - lg) * h;
      return 1.0 - q;
    }
  }
  throw numerical_error("gamma_p: continued fraction failed to converge");
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Survival function of the chi-square law with `df` degrees of freedom.
inline double chi_squared_sf(double x, double df) {
  if (df <= 0.0) throw parameter_error("chi_squared_sf: df > 0 required");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

// Upper alpha quantile of the chi-square law via bisection on the sf.
inline double chi_squared_upper_quantile(double alpha, double df) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw parameter_error("chi_squared_upper_quantile: alpha in (0,1)");
  double lo = 0.0, hi = df + 1.0;
  while (chi_squared_sf(hi, df) > alpha) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi_squared_sf(mid, df) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Kolmogorov-Smirnov distance of a sample against Uniform(0,1).
inline double ks_distance_uniform(std::vector<double> sample) {
  if (sample.empty()) throw parameter_error("ks_distance_uniform: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    d = std::max(d, std::abs((i + 1) / n - u));
    d = std::max(d, std::abs(u - i / n));
  }
  return d;
}

// Asymptotic Kolmogorov distribution survival probability.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline bool ks_uniform_pass(const std::vector<double>& sample, double alpha) {
  return ks_pvalue(ks_distance_uniform(sample), sample.size()) > alpha;
}

}  // namespace svrank
