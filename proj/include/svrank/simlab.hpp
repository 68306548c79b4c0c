#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "svrank/inference.hpp"
#include "svrank/rng.hpp"
#include "svrank/special_functions.hpp"
#include "svrank/spectra.hpp"

namespace svrank {

struct SignalSpec {
  int n_rows = 50;
  int n_cols = 10;
  int rank = 0;
  double m = 1.5;       // magnitude multiplier
  double sigma2 = 1.0;

  void validate() const {
    if (rank < 0 || rank >= n_cols)
      throw parameter_error("SignalSpec: rank must lie in [0, p)");
    if (m < 0.0) throw parameter_error("SignalSpec: m >= 0 required");
    if (sigma2 <= 0.0) throw parameter_error("SignalSpec: sigma2 > 0 required");
  }
};

enum class NoiseKind { gaussian, heavy_tail, right_skew };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::heavy_tail: return "heavy_tail";
    case NoiseKind::right_skew: return "right_skew";
  }
  return "?";
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double sigma2 = 1.0;
};

// Signal singular values: the set {m * i * sigma * (Np)^{1/4}, i <= rank},
// stored descending so the largest signal is m * rank * sigma * (Np)^{1/4}.
inline Eigen::VectorXd signal_singular_values(const SignalSpec& spec) {
  spec.validate();
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(spec.n_cols);
  const double base = spec.m * std::sqrt(spec.sigma2) *
                      std::pow(static_cast<double>(spec.n_rows) * spec.n_cols,
                               0.25);
  for (int j = 0; j < spec.rank; ++j) lambda[j] = base * (spec.rank - j);
  return lambda;
}

// B = U_B diag(Lambda) V_B^T with rotation factors taken from the SVD of an
// independent N x p standard Gaussian matrix.
inline Eigen::MatrixXd generate_signal(const SignalSpec& spec,
                                       RandomStream& rng) {
  spec.validate();
  if (spec.rank == 0 || spec.m == 0.0)
    return Eigen::MatrixXd::Zero(spec.n_rows, spec.n_cols);
  Eigen::MatrixXd g(spec.n_rows, spec.n_cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd lambda = signal_singular_values(spec);
  return svd.matrixU() * lambda.asDiagonal() * svd.matrixV().transpose();
}

// i.i.d. noise with variance sigma2 for every kind:
//   gaussian:   N(0, sigma2)
//   heavy_tail: sigma * sqrt(3/5) t_5              (t_5 variance 5/3)
//   right_skew: sigma * (sqrt(3/10) t_5 + sqrt(1/2) (Exp(1) - 1))
inline Eigen::MatrixXd generate_noise(int n_rows, int n_cols,
                                      const NoiseSpec& spec,
                                      RandomStream& rng) {
  if (spec.sigma2 <= 0.0)
    throw parameter_error("generate_noise: sigma2 > 0 required");
  const double sigma = std::sqrt(spec.sigma2);
  Eigen::MatrixXd e(n_rows, n_cols);
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
      double x = 0.0;
      switch (spec.kind) {
        case NoiseKind::gaussian:
          x = rng.normal();
          break;
        case NoiseKind::heavy_tail:
          x = std::sqrt(3.0 / 5.0) * rng.student_t(5.0);
          break;
        case NoiseKind::right_skew:
          x = std::sqrt(3.0 / 10.0) * rng.student_t(5.0) +
              std::sqrt(0.5) * (rng.exponential() - 1.0);
          break;
      }
      e(i, j) = sigma * x;
    }
  }
  return e;
}

struct SimDesign {
  SignalSpec signal;
  NoiseKind noise = NoiseKind::gaussian;

  Eigen::MatrixXd draw(RandomStream& rng) const {
    const Eigen::MatrixXd b = generate_signal(signal, rng);
    return b + generate_noise(signal.n_rows, signal.n_cols,
                              {noise, signal.sigma2}, rng);
  }
};

// ---------------------------------------------------------------------------
// Experiment runners.  Every runner is a pure function of (design, seed):
// replication r draws through the derived stream (seed, r).
// ---------------------------------------------------------------------------

struct StepCalibration {
  int k = 0;
  std::vector<double> sorted_pvalues;
  double ks_distance = 0.0;
  double ks_pvalue = 0.0;
};

struct CalibrationResult {
  std::vector<StepCalibration> steps;  // k = 1..max_step
};

// Kac-Rice global-null statistic applied to the trailing spectrum as if it
// were a fresh matrix.  Deliberate negative control reproducing the
// conservatism of naive sequential testing; not a recommended method.
inline double sequential_kac_rice_misuse(const SingularSpectrum& spectrum,
                                         int k, double sigma2,
                                         const QuadratureConfig& cfg) {
  const int p = static_cast<int>(spectrum.cols());
  const int n = static_cast<int>(spectrum.rows());
  const Eigen::VectorXd tail = spectrum.values.segment(k - 1, p - k + 1);
  return csv_statistic_detail(tail, n - k + 1, 1, 0.0, sigma2, cfg).value;
}

struct CalibrationOptions {
  TestMethod method = TestMethod::csv;
  int max_step = 0;          // 0 = all p-1 steps
  bool kac_rice_misuse = false;  // replace CSV with the negative control
  InferenceConfig inference;
};

inline CalibrationResult run_null_calibration(const SimDesign& design,
                                              const CalibrationOptions& opt,
                                              int reps, std::uint64_t seed) {
  const int p = design.signal.n_cols;
  const int max_step = opt.max_step > 0 ? std::min(opt.max_step, p - 1) : p - 1;
  std::vector<std::vector<double>> pvals(max_step);
  for (int r = 0; r < reps; ++r) {
    RandomStream rng = RandomStream::from(seed, r);
    const Eigen::MatrixXd y = design.draw(rng);
    const SingularSpectrum spectrum = svd_full(ObservedMatrix::from(y));
    InferenceConfig cfg = opt.inference;
    cfg.importance_sampling.seed = SplitMix64::derive(seed, (1ULL << 32) + r);
    for (int k = 1; k <= max_step; ++k) {
      double pv = 0.0;
      if (opt.kac_rice_misuse) {
        pv = sequential_kac_rice_misuse(spectrum, k, design.signal.sigma2,
                                        cfg.quadrature);
      } else {
        pv = step_test(spectrum, k, opt.method, design.signal.sigma2, cfg)
                 .p_value;
      }
      pvals[k - 1].push_back(pv);
    }
  }
  CalibrationResult result;
  for (int k = 1; k <= max_step; ++k) {
    StepCalibration step;
    step.k = k;
    step.sorted_pvalues = pvals[k - 1];
    std::sort(step.sorted_pvalues.begin(), step.sorted_pvalues.end());
    step.ks_distance = ks_distance_uniform(step.sorted_pvalues);
    step.ks_pvalue = ks_pvalue(step.ks_distance, step.sorted_pvalues.size());
    result.steps.push_back(std::move(step));
  }
  return result;
}

struct CoverageResult {
  int k = 0;
  int reps = 0;
  int covered = 0;
  double rate() const { return static_cast<double>(covered) / reps; }
};

// Coverage of CI_k for the realized parameter <U_k V_k^T, B>.
inline std::vector<CoverageResult> run_coverage(const SimDesign& design,
                                                double level, int reps,
                                                std::uint64_t seed,
                                                std::vector<int> which_k = {1, 2},
                                                const QuadratureConfig& quad = {}) {
  std::vector<CoverageResult> results;
  for (int k : which_k) results.push_back({k, reps, 0});
  for (int r = 0; r < reps; ++r) {
    RandomStream rng = RandomStream::from(seed, r);
    const Eigen::MatrixXd b = generate_signal(design.signal, rng);
    const Eigen::MatrixXd y =
        b + generate_noise(design.signal.n_rows, design.signal.n_cols,
                           {design.noise, design.signal.sigma2}, rng);
    const SingularSpectrum spectrum = svd_full(ObservedMatrix::from(y));
    for (std::size_t i = 0; i < which_k.size(); ++i) {
      const int k = which_k[i];
      const double target =
          spectrum.left.col(k - 1).dot(b * spectrum.right.col(k - 1));
      const ConfidenceInterval ci = confidence_interval(
          spectrum, k, design.signal.sigma2, level, quad);
      if (ci.lower <= target && target <= ci.upper) ++results[i].covered;
    }
  }
  return results;
}

enum class NoiseMode { known, median, cv_dfc };

inline const char* to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::known: return "known";
    case NoiseMode::median: return "median";
    case NoiseMode::cv_dfc: return "cv_dfc";
  }
  return "?";
}

struct RankExperimentResult {
  int reps = 0;
  int correct = 0;
  int overestimated = 0;
  double mse = 0.0;
  std::vector<int> kappa_counts;  // index = selected rank

  double rate_correct() const { return static_cast<double>(correct) / reps; }
  double rate_over() const { return static_cast<double>(overestimated) / reps; }
};

inline RankExperimentResult run_rank_experiment(
    const SimDesign& design, TestMethod method, StopRule rule, double alpha,
    int reps, std::uint64_t seed, NoiseMode noise_mode,
    const InferenceConfig& base_cfg = {}) {
  RankExperimentResult result;
  result.reps = reps;
  result.kappa_counts.assign(design.signal.n_cols, 0);
  double sq_sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    RandomStream rng = RandomStream::from(seed, r);
    const Eigen::MatrixXd y = design.draw(rng);
    const ObservedMatrix obs = ObservedMatrix::from(y);
    double sigma2 = design.signal.sigma2;
    if (noise_mode == NoiseMode::median) {
      sigma2 = sigma_med(obs).sigma2;
    } else if (noise_mode == NoiseMode::cv_dfc) {
      RandomStream cv_rng = rng.substream(0xCF);
      const double d1 = singular_values_of(obs.entries)[0];
      const double lambda =
          cv_select_lambda(obs, 20, default_lambda_grid(d1), cv_rng);
      sigma2 = sigma_hat(obs, lambda, NoiseVariant::lambda_df_c).sigma2;
    }
    InferenceConfig cfg = base_cfg;
    cfg.importance_sampling.seed = SplitMix64::derive(seed, (1ULL << 33) + r);
    const RankDecision decision =
        estimate_rank(obs, method, rule, alpha, sigma2, cfg);
    const int diff = decision.kappa_hat - design.signal.rank;
    if (diff == 0) ++result.correct;
    if (diff > 0) ++result.overestimated;
    sq_sum += static_cast<double>(diff) * diff;
    ++result.kappa_counts[decision.kappa_hat];
  }
  result.mse = sq_sum / reps;
  return result;
}

}  // namespace svrank
