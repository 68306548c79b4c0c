#pragma once

#include <vector>

#include "svrank/baseline_tests.hpp"
#include "svrank/csv_test.hpp"
#include "svrank/icsv_test.hpp"
#include "svrank/noise_estimation.hpp"
#include "svrank/rank_selection.hpp"
#include "svrank/spectra.hpp"

namespace svrank {

struct InferenceConfig {
  QuadratureConfig quadrature;
  ISConfig importance_sampling;
  double alpha = 0.05;  // threshold echoed by the baseline tests
};

// One step-k test by the chosen method.
inline TestOutcome step_test(const SingularSpectrum& spectrum, int k,
                             TestMethod method, double sigma2,
                             const InferenceConfig& cfg = {}) {
  switch (method) {
    case TestMethod::csv: {
      const CsvStatistic s =
          csv_statistic_detail(spectrum, k, 0.0, sigma2, cfg.quadrature);
      TestOutcome out;
      out.k = k;
      out.method = TestMethod::csv;
      out.p_value = s.value;
      out.statistic = s.value;
      out.sigma2_used = sigma2;
      out.diagnostics["degenerate"] = s.degenerate ? 1.0 : 0.0;
      return out;
    }
    case TestMethod::icsv: {
      ISConfig is = cfg.importance_sampling;
      is.seed = SplitMix64::derive(cfg.importance_sampling.seed, k);
      return icsv_statistic(spectrum, k, sigma2, is);
    }
    case TestMethod::pseudorank:
      return pseudorank_test(spectrum, k, sigma2, cfg.alpha);
    case TestMethod::muirhead:
      return muirhead_test(spectrum, static_cast<int>(spectrum.rows()), k,
                           cfg.alpha);
  }
  throw parameter_error("step_test: unknown method");
}

// p-values of H_{0,k} for k = 1..p-1.
inline std::vector<TestOutcome> sequential_tests(
    const SingularSpectrum& spectrum, double sigma2, TestMethod method,
    const InferenceConfig& cfg = {}) {
  const int p = static_cast<int>(spectrum.cols());
  if (method != TestMethod::muirhead && sigma2 <= 0.0)
    throw parameter_error("sequential_tests: sigma2 > 0 required");
  std::vector<TestOutcome> outcomes;
  outcomes.reserve(p - 1);
  for (int k = 1; k <= p - 1; ++k)
    outcomes.push_back(step_test(spectrum, k, method, sigma2, cfg));
  return outcomes;
}

inline std::vector<double> sequential_pvalues(const SingularSpectrum& spectrum,
                                              double sigma2, TestMethod method,
                                              const InferenceConfig& cfg = {}) {
  std::vector<double> pvalues;
  for (const TestOutcome& t : sequential_tests(spectrum, sigma2, method, cfg))
    pvalues.push_back(t.p_value);
  return pvalues;
}

// svd -> sequential p-values -> stopping rule.
inline RankDecision estimate_rank(const ObservedMatrix& y, TestMethod method,
                                  StopRule rule, double alpha, double sigma2,
                                  const InferenceConfig& cfg = {}) {
  const SingularSpectrum spectrum = svd_full(y);
  return decide_rank(sequential_pvalues(spectrum, sigma2, method, cfg), rule,
                     alpha);
}

inline RankDecision estimate_rank(const ObservedMatrix& y, TestMethod method,
                                  StopRule rule, double alpha,
                                  const NoiseEstimate& noise,
                                  const InferenceConfig& cfg = {}) {
  return estimate_rank(y, method, rule, alpha, noise.sigma2, cfg);
}

}  // namespace svrank
