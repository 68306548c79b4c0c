#pragma once

#include <cmath>
#include <vector>

#include "svrank/errors.hpp"

namespace svrank {

enum class StopRule { simple, strong };

inline const char* to_string(StopRule r) {
  return r == StopRule::simple ? "simple" : "strong";
}

struct RankDecision {
  int kappa_hat = 0;
  StopRule rule = StopRule::strong;
  double alpha = 0.05;
  std::vector<double> pvalues;
  std::vector<double> per_step_thresholds;  // strong rule only
};

namespace detail {

inline void check_pvalues(const std::vector<double>& pvalues, double alpha) {
  if (pvalues.empty())
    throw parameter_error("rank selection: empty p-value sequence");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw parameter_error("rank selection: alpha must lie in (0,1)");
  for (double p : pvalues)
    if (!(p >= 0.0 && p <= 1.0))
      throw parameter_error("rank selection: p-values must lie in [0,1]");
}

}  // namespace detail

// max{k : p_k <= alpha}, 0 if none.
inline int simple_stop(const std::vector<double>& pvalues, double alpha) {
  detail::check_pvalues(pvalues, alpha);
  int kappa = 0;
  for (std::size_t k = 1; k <= pvalues.size(); ++k)
    if (pvalues[k - 1] <= alpha) kappa = static_cast<int>(k);
  return kappa;
}

// max{k : exp(sum_{j=k}^{p-1} log p_j / j) <= alpha k/(p-1)}, 0 if none.
// p_j = 0 contributes log 0 = -inf, so the threshold is met at that k and
// everything below it.
inline int strong_stop(const std::vector<double>& pvalues, double alpha,
                       std::vector<double>* thresholds = nullptr) {
  detail::check_pvalues(pvalues, alpha);
  const int steps = static_cast<int>(pvalues.size());
  if (thresholds) thresholds->assign(steps, 0.0);
  int kappa = 0;
  double tail = 0.0;  // sum_{j >= k} log p_j / j, built from the right
  for (int k = steps; k >= 1; --k) {
    tail += std::log(pvalues[k - 1]) / k;
    const double threshold = alpha * k / steps;
    if (thresholds) (*thresholds)[k - 1] = threshold;
    if (kappa == 0 && std::exp(tail) <= threshold) kappa = k;
  }
  return kappa;
}

inline RankDecision decide_rank(const std::vector<double>& pvalues,
                                StopRule rule, double alpha) {
  RankDecision decision;
  decision.rule = rule;
  decision.alpha = alpha;
  decision.pvalues = pvalues;
  if (rule == StopRule::simple) {
    decision.kappa_hat = simple_stop(pvalues, alpha);
  } else {
    decision.kappa_hat =
        strong_stop(pvalues, alpha, &decision.per_step_thresholds);
  }
  return decision;
}

}  // namespace svrank
