#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "svrank/errors.hpp"
#include "svrank/rng.hpp"
#include "svrank/spectra.hpp"

namespace svrank {

enum class NoiseVariant { simple, lambda, lambda_df, lambda_df_c, median };

inline const char* to_string(NoiseVariant v) {
  switch (v) {
    case NoiseVariant::simple: return "simple";
    case NoiseVariant::lambda: return "lambda";
    case NoiseVariant::lambda_df: return "lambda_df";
    case NoiseVariant::lambda_df_c: return "lambda_df_c";
    case NoiseVariant::median: return "median";
  }
  return "?";
}

struct NoiseEstimate {
  double sigma2 = 0.0;
  NoiseVariant variant = NoiseVariant::median;
  std::optional<double> lambda_used;
  std::optional<int> df;
  std::optional<double> c;
  std::optional<int> cv_folds;
};

// Nuclear-norm proximal map: B = U diag(max(d_i - lambda, 0)) V^T, the
// closed-form solution of 1/2 ||Y-B||_F^2 + lambda ||B||_*.  df counts the
// surviving singular values.
struct SoftThresholdResult {
  Eigen::MatrixXd fit;
  int df = 0;
  Eigen::VectorXd input_singular_values;
};

inline SoftThresholdResult soft_threshold_svd(const Eigen::MatrixXd& y,
                                              double lambda) {
  if (lambda < 0.0)
    throw parameter_error("soft_threshold_svd: lambda >= 0 required");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd orig = svd.singularValues();
  Eigen::VectorXd d = orig;
  int df = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    d[i] = std::max(0.0, d[i] - lambda);
    if (d[i] > 0.0) ++df;
  }
  return {svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose(), df, orig};
}

inline SoftThresholdResult soft_threshold_svd(const ObservedMatrix& y,
                                              double lambda) {
  return soft_threshold_svd(y.entries, lambda);
}

struct MaskedMatrix {
  ObservedMatrix base;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed;

  void validate() const {
    if (observed.rows() != base.rows() || observed.cols() != base.cols())
      throw parameter_error("MaskedMatrix: mask shape mismatch");
    for (Eigen::Index i = 0; i < observed.rows(); ++i)
      if (!observed.row(i).any())
        throw parameter_error("MaskedMatrix: empty observed row");
    for (Eigen::Index j = 0; j < observed.cols(); ++j)
      if (!observed.col(j).any())
        throw parameter_error("MaskedMatrix: empty observed column");
  }
};

struct SoftImputeResult {
  Eigen::MatrixXd fit;
  bool converged = false;
  int iterations = 0;
  double last_relative_change = 0.0;
  std::vector<double> objective_trace;
};

namespace detail {

inline double nuclear_norm(const Eigen::MatrixXd& m) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues().sum();
}

inline double soft_impute_objective(const MaskedMatrix& masked,
                                    const Eigen::MatrixXd& b, double lambda) {
  double rss = 0.0;
  for (Eigen::Index j = 0; j < masked.observed.cols(); ++j)
    for (Eigen::Index i = 0; i < masked.observed.rows(); ++i)
      if (masked.observed(i, j)) {
        const double r = masked.base.entries(i, j) - b(i, j);
        rss += r * r;
      }
  return 0.5 * rss + lambda * nuclear_norm(b);
}

}  // namespace detail

// Fixed-point iteration B <- SoftThreshSVD(P_Omega(Y) + P_Omega_perp(B)).
// The objective is convex, so an optional warm start changes the iteration
// count but not the converged fit; track_objective skips the per-iteration
// objective SVD when the trace is not needed (e.g. inside cross-validation).
inline SoftImputeResult soft_impute(const MaskedMatrix& masked, double lambda,
                                    double tol = 1e-7, int max_iter = 500,
                                    const Eigen::MatrixXd* warm_start = nullptr,
                                    bool track_objective = true) {
  masked.validate();
  if (lambda <= 0.0) throw parameter_error("soft_impute: lambda > 0 required");
  const Eigen::Index n = masked.base.rows(), p = masked.base.cols();
  Eigen::MatrixXd b = warm_start ? *warm_start
                                 : Eigen::MatrixXd::Zero(n, p);
  if (warm_start && (b.rows() != n || b.cols() != p))
    throw parameter_error("soft_impute: warm start shape mismatch");
  SoftImputeResult result;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd filled = b;
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (masked.observed(i, j)) filled(i, j) = masked.base.entries(i, j);
    Eigen::MatrixXd next = soft_threshold_svd(filled, lambda).fit;
    const double denom = std::max(1.0, b.norm());
    const double change = (next - b).norm() / denom;
    b = std::move(next);
    result.iterations = iter + 1;
    result.last_relative_change = change;
    if (track_objective)
      result.objective_trace.push_back(
          detail::soft_impute_objective(masked, b, lambda));
    if (change <= tol) {
      result.converged = true;
      break;
    }
  }
  result.fit = std::move(b);
  return result;
}

// 50 log-spaced lambdas from d_1 down to d_1 * 1e-3; lambda >= d_1 is the
// zero fit and smaller lambdas approach the identity fit.
inline std::vector<double> default_lambda_grid(double d1, int points = 50) {
  if (d1 <= 0.0) throw parameter_error("default_lambda_grid: d1 > 0 required");
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i)
    grid[i] = d1 * std::pow(10.0, -3.0 * i / (points - 1.0));
  return grid;
}

// K-fold cross-validation over held-out entries: all N*p positions are
// partitioned into `folds` random non-overlapping sets; each fold is hidden,
// softImpute completes the rest, and the grid lambda minimizing the mean
// held-out squared error wins.
inline double cv_select_lambda(const ObservedMatrix& y, int folds,
                               const std::vector<double>& grid,
                               RandomStream& rng, double tol = 1e-5,
                               int max_iter = 200) {
  if (folds < 2) throw parameter_error("cv_select_lambda: folds >= 2 required");
  if (grid.empty()) throw parameter_error("cv_select_lambda: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] > grid[i - 1])
      throw parameter_error("cv_select_lambda: grid must be sorted descending");

  const Eigen::Index n = y.rows(), p = y.cols();
  const Eigen::Index total = n * p;
  std::vector<Eigen::Index> perm(total);

  // A partition is valid when every fold's complement still observes each
  // row and column; re-randomize up to 10 times otherwise.
  std::vector<int> fold_of(total);
  bool valid = false;
  for (int attempt = 0; attempt < 10 && !valid; ++attempt) {
    std::iota(perm.begin(), perm.end(), 0);
    for (Eigen::Index i = total - 1; i > 0; --i) {
      const Eigen::Index j =
          static_cast<Eigen::Index>(rng.uniform() * (i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    for (Eigen::Index i = 0; i < total; ++i)
      fold_of[perm[i]] = static_cast<int>(i % folds);
    valid = true;
    for (int f = 0; f < folds && valid; ++f) {
      std::vector<int> row_seen(n, 0), col_seen(p, 0);
      for (Eigen::Index idx = 0; idx < total; ++idx) {
        if (fold_of[idx] == f) continue;
        row_seen[idx % n] = 1;
        col_seen[idx / n] = 1;
      }
      for (Eigen::Index i = 0; i < n; ++i) valid = valid && row_seen[i];
      for (Eigen::Index j = 0; j < p; ++j) valid = valid && col_seen[j];
    }
  }
  if (!valid)
    throw numerical_error("cv_select_lambda: could not build a usable fold "
                          "partition after 10 attempts");

  std::vector<double> mean_err(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    MaskedMatrix masked;
    masked.base = y;
    masked.observed.resize(n, p);
    for (Eigen::Index idx = 0; idx < total; ++idx)
      masked.observed(idx % n, idx / n) = fold_of[idx] != f;
    Eigen::MatrixXd warm = Eigen::MatrixXd::Zero(n, p);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      // descending grid: the previous fit is a cheap warm start
      warm = soft_impute(masked, grid[g], tol, max_iter, &warm, false).fit;
      const Eigen::MatrixXd& fit = warm;
      double err = 0.0;
      for (Eigen::Index idx = 0; idx < total; ++idx) {
        if (fold_of[idx] != f) continue;
        const Eigen::Index i = idx % n, j = idx / n;
        const double r = y.entries(i, j) - fit(i, j);
        err += r * r;
      }
      mean_err[g] += err / folds;
    }
  }
  // Prefer the strongest regularization among lambdas whose CV error is
  // numerically indistinguishable from the minimum: once soft-impute
  // reaches the interpolation regime the error curve is exactly flat, and
  // blind argmin would drift to the bottom of the grid on rounding noise.
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (mean_err[g] < mean_err[best] * (1.0 - 1e-4)) best = g;
  return grid[best];
}

// Unbiased (divergence-based) degrees of freedom of the spectral
// soft-threshold map, scaled by the row count so the result lies in [0, p].
// The raw count of surviving singular values ignores the shrinkage applied
// to each kept direction and materially overstates df: on pure noise the
// df-corrected denominators then over-inflate the estimate.
inline double soft_threshold_effective_df(const Eigen::VectorXd& d,
                                          double lambda, Eigen::Index rows,
                                          Eigen::Index cols) {
  const double gap = static_cast<double>(std::llabs(rows - cols));
  double div = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] <= lambda) continue;
    div += 1.0 + gap * (d[i] - lambda) / d[i];
    for (Eigen::Index j = 0; j < d.size(); ++j) {
      if (j == i) continue;
      const double denom = d[i] * d[i] - d[j] * d[j];
      if (std::abs(denom) > 1e-12 * d[0] * d[0])
        div += 2.0 * d[i] * (d[i] - lambda) / denom;
    }
  }
  return div / static_cast<double>(rows);
}

// Residual-based estimators of Eq-(18) form: RSS over N*p, N*(p-df), or
// N*(p-c*df), with df the divergence-based effective dimension above.
inline NoiseEstimate sigma_hat(const ObservedMatrix& y, double lambda,
                               NoiseVariant variant, double c = 2.0 / 3.0) {
  if (variant != NoiseVariant::lambda && variant != NoiseVariant::lambda_df &&
      variant != NoiseVariant::lambda_df_c)
    throw parameter_error("sigma_hat: variant must be a lambda family member");
  if (c < 0.0 || c > 1.0) throw parameter_error("sigma_hat: c in [0,1] required");
  const SoftThresholdResult st = soft_threshold_svd(y, lambda);
  const double rss = (y.entries - st.fit).squaredNorm();
  const double n = static_cast<double>(y.rows());
  const double p = static_cast<double>(y.cols());
  const double eff_df = soft_threshold_effective_df(
      st.input_singular_values, lambda, y.rows(), y.cols());
  double denom = 0.0;
  switch (variant) {
    case NoiseVariant::lambda: denom = n * p; break;
    case NoiseVariant::lambda_df: denom = n * (p - eff_df); break;
    default: denom = n * (p - c * eff_df); break;
  }
  if (denom <= 0.0)
    throw degenerate_error("sigma_hat: degenerate denominator (c*df >= p)");
  NoiseEstimate est;
  est.sigma2 = rss / denom;
  est.variant = variant;
  est.lambda_used = lambda;
  est.df = st.df;
  if (variant == NoiseVariant::lambda_df_c) est.c = c;
  return est;
}

/// Median of the Marcenko-Pastur law with aspect ratio in (0,1]: numerical
// integration of the density over [(1-sqrt r)^2, (1+sqrt r)^2] and
// root-finding of CDF = 1/2.
inline double mp_median(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw parameter_error("mp_median: ratio must lie in (0,1]");
  const double sq = std::sqrt(ratio);
  const double lo = (1.0 - sq) * (1.0 - sq);
  const double hi = (1.0 + sq) * (1.0 + sq);
  auto density = [&](double x) {
    const double arg = (hi - x) * (x - lo);
    return arg <= 0.0 ? 0.0 : std::sqrt(arg) / (2.0 * M_PI * ratio * x);
  };
  // Adaptive Simpson.
  auto simpson = [&](auto&& self, double a, double b, double fa, double fm,
                     double fb, double whole, int depth) -> double {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = density(lm), frm = density(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 1e-12)
      return left + right;
    return self(self, a, m, fa, flm, fm, left, depth - 1) +
           self(self, m, b, fm, frm, fb, right, depth - 1);
  };
  auto cdf = [&](double t) {
    const double fa = density(lo), fb = density(t);
    const double fm = density(0.5 * (lo + t));
    const double whole = (t - lo) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(simpson, lo, t, fa, fm, fb, whole, 40);
  };
  double a = lo, b = hi;
  while (b - a > 1e-9) {
    const double mid = 0.5 * (a + b);
    (cdf(mid) < 0.5 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

// sigma2_med = d_med^2 / (N mu), the Marcenko-Pastur-median calibrated
// robust estimator; d_med is the sample median of the singular values
// (average of the two middle values for even p).
inline NoiseEstimate sigma_med(const ObservedMatrix& y) {
  const Eigen::Index n = y.rows(), p = y.cols();
  if (p < 2) throw parameter_error("sigma_med: p >= 2 required");
  Eigen::VectorXd d = singular_values_of(y.entries);  // descending
  const double dmed =
      (p % 2 == 1) ? d[p / 2] : 0.5 * (d[p / 2 - 1] + d[p / 2]);
  const double mu = mp_median(static_cast<double>(p) / n);
  NoiseEstimate est;
  est.sigma2 = dmed * dmed / (n * mu);
  est.variant = NoiseVariant::median;
  return est;
}

// sigma2_simple = sum_{j > kappa} d_j^2 / (N (p - kappa)) with known rank.
inline NoiseEstimate sigma_simple(const SingularSpectrum& spectrum, int kappa,
                                  int n_rows) {
  const int p = static_cast<int>(spectrum.cols());
  if (kappa < 0 || kappa >= p)
    throw parameter_error("sigma_simple: kappa must lie in [0, p)");
  double sum = 0.0;
  for (int j = kappa; j < p; ++j)
    sum += spectrum.values[j] * spectrum.values[j];
  NoiseEstimate est;
  est.sigma2 = sum / (static_cast<double>(n_rows) * (p - kappa));
  est.variant = NoiseVariant::simple;
  return est;
}

}  // namespace svrank
