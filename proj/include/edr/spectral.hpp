#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edr/estimator.hpp"
#include "edr/sample.hpp"

namespace edr {

/// Raised by inverse_sqrt when an eigenvalue falls below the floor.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(double eigenvalue, double floor)
      : std::runtime_error(describe(eigenvalue, floor)), eigenvalue_(eigenvalue), floor_(floor) {}
  double eigenvalue() const { return eigenvalue_; }
  double floor() const { return floor_; }

 private:
  static std::string describe(double eigenvalue, double floor) {
    return "matrix is numerically singular: eigenvalue " + shortest(eigenvalue) + " is below the floor " +
           shortest(floor);
  }
  static std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
  double eigenvalue_;
  double floor_;
};

/// Eigenpairs of a symmetric matrix, eigenvalues descending, each eigenvector
/// signed so that its largest-magnitude entry (first on ties) is nonnegative.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

inline SymmetricEigen symmetric_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigendecomposition needs a square matrix");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver did not converge");
  const Eigen::Index d = m.rows();
  SymmetricEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::Index arg = 0;
    out.vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, k) < 0.0) out.vectors.col(k) = -out.vectors.col(k);
  }
  return out;
}

/// Σ̂_n = (1/n) Σ_i (X_i - X̄)(X_i - X̄)^T.
struct CovarianceEstimate {
  Matrix matrix;
  Vector mean;
};

inline CovarianceEstimate empirical_covariance(const Sample& sample) {
  const double n = static_cast<double>(sample.n());
  CovarianceEstimate out;
  out.mean = sample.x().colwise().mean().transpose();
  const Matrix centered = sample.x().rowwise() - out.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / n;
  out.matrix = 0.5 * (cov + cov.transpose());
  return out;
}

/// Default floor for Σ̂^{-1/2}: 1e-8 * trace / d.
inline double default_min_eig_floor(const Matrix& m) {
  return 1e-8 * m.trace() / static_cast<double>(m.rows());
}

/// V diag(λ^{-1/2}) V^T. Throws SingularMatrixError if min λ < floor.
inline Matrix inverse_sqrt(const Matrix& m, double min_eig_floor) {
  const auto eig = symmetric_eigen(m);
  const Eigen::Index d = m.rows();
  const double smallest = eig.values(d - 1);
  if (!(smallest >= min_eig_floor) || !(smallest > 0.0)) throw SingularMatrixError(smallest, min_eig_floor);
  const Vector scale = eig.values.cwiseSqrt().cwiseInverse();
  Matrix out = eig.vectors * scale.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (out + out.transpose());
}

/// Eigen-decomposition of Λ̂_n and the whitened directions β̂_k = Σ̂^{-1/2} η̂_k.
struct EDRBasis {
  Vector eigenvalues;
  Matrix eta;
  /// d x N, columns not renormalized.
  Matrix beta;
  Eigen::Index n_directions = 0;
  /// Eigengaps λ_k - λ_{k+1} below 1e-6 λ_1.
  std::vector<std::string> warnings;
};

inline EDRBasis edr_basis(const Matrix& lambda, const CovarianceEstimate& cov, Eigen::Index n_directions,
                          double min_eig_floor) {
  const Eigen::Index d = lambda.rows();
  if (n_directions < 1 || n_directions > d)
    throw std::out_of_range("number of directions " + std::to_string(n_directions) +
                            " outside [1, " + std::to_string(d) + "]");
  if (cov.matrix.rows() != d) throw std::invalid_argument("covariance and Λ̂ dimensions differ");
  const Matrix whitening = inverse_sqrt(cov.matrix, min_eig_floor);
  const auto eig = symmetric_eigen(lambda);
  EDRBasis out;
  out.eigenvalues = eig.values;
  out.eta = eig.vectors;
  out.n_directions = n_directions;
  out.beta = whitening * eig.vectors.leftCols(n_directions);
  const double top = eig.values(0);
  for (Eigen::Index k = 0; k + 1 < d; ++k) {
    const double gap = eig.values(k) - eig.values(k + 1);
    if (gap < 1e-6 * top) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "eigengap between eigenvalues " << k + 1 << " and " << k + 2 << " is " << gap
          << ", below 1e-6 of the largest eigenvalue; directions may be unidentifiable";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

inline EDRBasis edr_basis(const LambdaEstimate& lambda, const CovarianceEstimate& cov,
                          Eigen::Index n_directions) {
  return edr_basis(lambda.matrix, cov, n_directions, default_min_eig_floor(cov.matrix));
}

/// Orthogonal projector onto the column space of b (rank checked).
inline Matrix column_space_projector(const Matrix& b) {
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * largest && largest > 0.0) ++rank;
  if (rank != b.cols())
    throw std::invalid_argument("subspace basis is rank deficient (rank " + std::to_string(rank) +
                                " < " + std::to_string(b.cols()) + ")");
  const Matrix& u = svd.matrixU();
  return u * u.transpose();
}

/// ||P1 - P2||_F / sqrt(2k): 0 for equal spans, 1 for orthogonal spans.
inline double subspace_distance(const Matrix& b1, const Matrix& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw std::invalid_argument("subspace bases must have the same shape");
  const double k = static_cast<double>(b1.cols());
  const double dist = (column_space_projector(b1) - column_space_projector(b2)).norm() / std::sqrt(2.0 * k);
  return std::clamp(dist, 0.0, 1.0);
}

/// Operator 2-norm sup ||Ax|| / ||x|| of a symmetric matrix. Distinct from sup_norm(vech(A)).
inline double operator_norm(const Matrix& m) {
  const auto eig = symmetric_eigen(m);
  return std::max(std::abs(eig.values(0)), std::abs(eig.values(eig.values.size() - 1)));
}

}  // namespace edr
