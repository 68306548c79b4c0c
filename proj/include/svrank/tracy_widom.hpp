#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "svrank/errors.hpp"

namespace svrank {

// Order-1 Tracy-Widom law, tabulated as (probability, threshold) pairs and
// evaluated by monotone cubic interpolation.  The table is embedded as a
// versioned two-column decimal text blob so the same bytes can be shipped
// or regenerated as a data file.
inline constexpr const char* kTracyWidom1TableText = R"(# tw1-table v1
# probability threshold
0.0010 -4.602390
0.0020 -4.408401
0.0050 -4.123337
0.0100 -3.880474
0.0200 -3.607111
0.0300 -3.429293
0.0500 -3.181181
0.0750 -2.960017
0.1000 -2.786492
0.1250 -2.640146
0.1500 -2.511428
0.1750 -2.395042
0.2000 -2.287718
0.2250 -2.187273
0.2500 -2.092167
0.2750 -2.001262
0.3000 -1.913682
0.3250 -1.828732
0.3500 -1.745845
0.3750 -1.664539
0.4000 -1.584399
0.4250 -1.505054
0.4500 -1.426163
0.4750 -1.347406
0.5000 -1.268472
0.5250 -1.189050
0.5500 -1.108823
0.6000 -0.944588
0.6500 -0.772694
0.7000 -0.589174
0.7500 -0.388386
0.8000 -0.161432
0.8500 0.107613
0.9000 0.453066
0.9250 0.679834
0.9500 0.979415
0.9600 1.135987
0.9700 1.330492
0.9750 1.449940
0.9800 1.592511
0.9850 1.770994
0.9900 2.013548
0.9925 2.179995
0.9950 2.407582
0.9975 2.780229
0.9990 3.246548
)";

struct TracyWidomTable {
  std::vector<double> probabilities;
  std::vector<double> thresholds;

  static const TracyWidomTable& order1() {
    static const TracyWidomTable table = parse(kTracyWidom1TableText);
    return table;
  }

  static TracyWidomTable parse(const std::string& text) {
    TracyWidomTable t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      double pr = 0.0, x = 0.0;
      if (!(ls >> pr >> x))
        throw input_error("TracyWidomTable: malformed line: " + line);
      t.probabilities.push_back(pr);
      t.thresholds.push_back(x);
    }
    if (t.probabilities.size() < 4)
      throw input_error("TracyWidomTable: too few rows");
    for (std::size_t i = 1; i < t.probabilities.size(); ++i) {
      if (t.probabilities[i] <= t.probabilities[i - 1] ||
          t.thresholds[i] <= t.thresholds[i - 1])
        throw input_error("TracyWidomTable: table must be strictly increasing");
    }
    return t;
  }
};

namespace detail {

// Fritsch-Carlson monotone cubic interpolation of y(x) at xq; x strictly
// increasing, xq within range.
inline double pchip_eval(const std::vector<double>& x,
                         const std::vector<double>& y, double xq) {
  const std::size_t n = x.size();
  std::vector<double> h(n - 1), delta(n - 1), m(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  m[0] = delta[0];
  m[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  std::size_t i = 0;
  while (i + 2 < n && x[i + 1] < xq) ++i;
  const double t = (xq - x[i]) / h[i];
  const double t2 = t * t, t3 = t2 * t;
  return y[i] * (2 * t3 - 3 * t2 + 1) + h[i] * m[i] * (t3 - 2 * t2 + t) +
         y[i + 1] * (-2 * t3 + 3 * t2) + h[i] * m[i + 1] * (t3 - t2);
}

}  // namespace detail

// Upper alpha quantile s(alpha) of the order-1 Tracy-Widom law.
inline double tw1_quantile(double alpha) {
  const TracyWidomTable& t = TracyWidomTable::order1();
  const double pr = 1.0 - alpha;
  if (pr < t.probabilities.front() || pr > t.probabilities.back())
    throw parameter_error("tw1_quantile: alpha outside the tabulated range");
  return detail::pchip_eval(t.probabilities, t.thresholds, pr);
}

// F_1(x) with boundary clamping; `clamped` reports an out-of-table query.
inline double tw1_cdf(double x, bool* clamped = nullptr) {
  const TracyWidomTable& t = TracyWidomTable::order1();
  if (clamped) *clamped = false;
  if (x <= t.thresholds.front()) {
    if (clamped) *clamped = true;
    return t.probabilities.front();
  }
  if (x >= t.thresholds.back()) {
    if (clamped) *clamped = true;
    return t.probabilities.back();
  }
  return detail::pchip_eval(t.thresholds, t.probabilities, x);
}

}  // namespace svrank
