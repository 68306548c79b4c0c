#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "svrank/errors.hpp"
#include "svrank/log_domain.hpp"

namespace svrank {

struct QuadratureConfig {
  int nodes_per_panel = 15;
  int max_panels = 20000;
  double rel_tol = 1e-9;
  // Truncation threshold for infinite upper limits: the tail is dropped
  // once the log-integrand falls this many nats below its running maximum
  // (e^-46 is below double-precision relative resolution of the total).
  double tail_drop_nats = 46.0;

  void validate() const {
    if (nodes_per_panel < 4)
      throw parameter_error("QuadratureConfig: nodes_per_panel >= 4 required");
    if (!(rel_tol > 0.0 && rel_tol <= 1e-3))
      throw parameter_error("QuadratureConfig: rel_tol must lie in (0, 1e-3]");
    if (tail_drop_nats < 30.0)
      throw parameter_error("QuadratureConfig: tail_drop_nats >= 30 required");
    if (max_panels < 8)
      throw parameter_error("QuadratureConfig: max_panels >= 8 required");
  }
};

// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on P_n.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  static const GaussLegendreRule& get(int n) {
    static std::map<int, GaussLegendreRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (x * p0 - p1) / (x * x - 1.0);
        const double dx = p0 / pp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      rule.nodes[i] = -x;
      rule.nodes[n - 1 - i] = x;
      rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
      rule.weights[n - 1 - i] = rule.weights[i];
    }
    return cache.emplace(n, std::move(rule)).first->second;
  }
};

namespace detail {

// log of the Gauss-Legendre estimate of int exp(logf) over [a, b].
template <class F>
double panel_log_estimate(F& logf, double a, double b,
                          const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double hi = kNegInf;
  const int n = static_cast<int>(rule.nodes.size());
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    const double lv = logf(mid + half * rule.nodes[i]).log_value;
    vals[i] = lv;
    hi = std::max(hi, lv);
  }
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * std::exp(vals[i] - hi);
  if (acc <= 0.0) return kNegInf;
  return hi + std::log(acc) + std::log(half);
}

// Scan outward from `lower` for the truncation point of an eventually
// decaying log-integrand.
template <class F>
double tail_cutoff(F& logf, double lower, double drop) {
  double h = std::max(1e-3, 1e-3 * std::abs(lower));
  double z = lower;
  double best = kNegInf;
  double prev = kNegInf;
  for (int i = 0; i < 2000; ++i) {
    z += h;
    h *= 1.2;
    const double v = logf(z).log_value;
    if (v > best) best = v;
    if (best != kNegInf && v < best - drop && v <= prev) return z;
    prev = v;
  }
  throw numerical_error(
      "integrate_log: failed to locate a decaying tail for the infinite "
      "upper limit");
}

}  // namespace detail

// Log-domain adaptive Gauss-Legendre integration of exp(logf) over
// (lower, upper); `upper` may be +inf.  Panels are bisected until the
// refined estimate agrees with the parent to rel_tol in log space; panels
// whose contribution is negligible relative to the running total are
// accepted as-is.
template <class F>
LogMagnitude integrate_log(F&& logf, double lower, double upper,
                           const QuadratureConfig& cfg = {}) {
  cfg.validate();
  if (!(lower < upper))
    throw parameter_error("integrate_log: lower < upper required");

  // Track the largest integrand value sampled anywhere; a narrow peak can
  // sit exactly on a bisection boundary where child panels' interior nodes
  // never see it, so panel estimates alone cannot prove negligibility.
  double best_z = lower;
  double best_v = kNegInf;
  auto f = [&](double z) {
    const LogMagnitude m = logf(z);
    if (m.log_value > best_v) {
      best_v = m.log_value;
      best_z = z;
    }
    return m;
  };

  if (std::isinf(upper))
    upper = detail::tail_cutoff(f, lower, cfg.tail_drop_nats);

  const GaussLegendreRule& rule = GaussLegendreRule::get(cfg.nodes_per_panel);

  struct Panel {
    double a, b, est;
  };
  std::vector<Panel> stack;
  stack.push_back({lower, upper, detail::panel_log_estimate(f, lower, upper, rule)});

  std::vector<double> accepted;
  double running_max = stack.back().est;
  double worst_accepted_diff = 0.0;
  int panels_used = 1;

  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    // Negligible relative to the total: keep the crude estimate — unless
    // this panel contains the best point sampled so far and that point
    // could still contribute (bound: best value times panel width).
    if (p.est < running_max - 2.0 * cfg.tail_drop_nats) {
      const bool may_hide_peak =
          best_z >= p.a && best_z <= p.b &&
          best_v + std::log(p.b - p.a) >= running_max - 2.0 * cfg.tail_drop_nats;
      if (!may_hide_peak) {
        accepted.push_back(p.est);
        continue;
      }
    }
    const double mid = 0.5 * (p.a + p.b);
    const double e1 = detail::panel_log_estimate(f, p.a, mid, rule);
    const double e2 = detail::panel_log_estimate(f, mid, p.b, rule);
    panels_used += 2;
    const double combined = log_sum_exp(std::array{e1, e2});
    running_max = std::max(running_max, combined);
    const double diff = std::abs(combined - p.est);
    if (diff <= 0.5 * cfg.rel_tol || (p.b - p.a) < 1e-14 * (upper - lower)) {
      accepted.push_back(combined);
      worst_accepted_diff = std::max(worst_accepted_diff, diff);
      continue;
    }
    if (panels_used > cfg.max_panels) {
      accepted.push_back(combined);
      for (const Panel& q : stack) accepted.push_back(q.est);
      throw numerical_error("integrate_log: panel budget exhausted",
                            log_sum_exp(accepted), diff);
    }
    stack.push_back({p.a, mid, e1});
    stack.push_back({mid, p.b, e2});
  }
  return LogMagnitude::from_log(log_sum_exp(accepted));
}

}  // namespace svrank
