#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "svrank/errors.hpp"

namespace svrank {

// N x p data matrix, oriented so N >= p.  Input arriving with fewer rows
// than columns is transposed on ingestion and flagged.
struct ObservedMatrix {
  Eigen::MatrixXd entries;
  bool transposed = false;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }

  static ObservedMatrix from(Eigen::MatrixXd m) {
    if (m.size() == 0)
      throw input_error("ObservedMatrix: empty matrix");
    if (!m.allFinite())
      throw input_error("ObservedMatrix: non-finite entries");
    ObservedMatrix out;
    out.transposed = m.rows() < m.cols();
    out.entries = out.transposed ? Eigen::MatrixXd(m.transpose()) : std::move(m);
    return out;
  }
};

// Ordered singular values d_1 >= ... >= d_p with orthonormal factors
// Y = U diag(d) V^T, U in R^{N x p}, V in R^{p x p}.
struct SingularSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd left;   // N x p
  Eigen::MatrixXd right;  // p x p

  Eigen::Index rows() const { return left.rows(); }
  Eigen::Index cols() const { return values.size(); }
};

// Dense SVD with a deterministic sign convention: the largest-magnitude
// entry of each left factor column is made positive.
inline SingularSpectrum svd_full(const ObservedMatrix& y) {
  if (!y.entries.allFinite())
    throw input_error("svd_full: non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(y.entries,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  SingularSpectrum s;
  s.values = svd.singularValues();
  s.left = svd.matrixU();
  s.right = svd.matrixV();
  for (Eigen::Index j = 0; j < s.left.cols(); ++j) {
    Eigen::Index imax = 0;
    s.left.col(j).cwiseAbs().maxCoeff(&imax);
    if (s.left(imax, j) < 0.0) {
      s.left.col(j) = -s.left.col(j);
      s.right.col(j) = -s.right.col(j);
    }
  }
  return s;
}

// Singular values only (squared-Gram route); used by the simulation
// harnesses where factors are not needed.
inline Eigen::VectorXd singular_values_of(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd gram =
      m.rows() >= m.cols() ? Eigen::MatrixXd(m.transpose() * m)
                           : Eigen::MatrixXd(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                     Eigen::EigenvaluesOnly);
  Eigen::VectorXd ev = eig.eigenvalues();  // ascending
  Eigen::VectorXd d(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    d[i] = std::sqrt(std::max(0.0, ev[ev.size() - 1 - i]));
  return d;
}

}  // namespace svrank
