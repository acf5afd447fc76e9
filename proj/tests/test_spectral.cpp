#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "edr/spectral.hpp"

namespace {

using namespace edr;

Matrix random_spd(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> z;
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = z(rng);
  return a * a.transpose() + 0.5 * Matrix::Identity(d, d);
}

Matrix random_basis(std::mt19937_64& rng, Eigen::Index d, Eigen::Index k) {
  std::normal_distribution<double> z;
  Matrix a(d, k);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = z(rng);
  return a;
}

TEST(EmpiricalCovariance, HandCases) {
  const Sample one(Vector::Zero(1), (Matrix(1, 2) << 3.0, -1.0).finished());
  EXPECT_EQ(empirical_covariance(one).matrix, Matrix::Zero(2, 2));

  Matrix x(2, 2);
  x << 1.0, 0.0, -1.0, 0.0;
  const auto cov = empirical_covariance(Sample(Vector::Zero(2), x));
  EXPECT_EQ(cov.matrix, (Matrix(2, 2) << 1.0, 0.0, 0.0, 0.0).finished());
  EXPECT_EQ(cov.mean, Vector::Zero(2));
}

TEST(EmpiricalCovariance, DividesByN) {
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  EXPECT_NEAR(empirical_covariance(Sample(Vector::Zero(3), x)).matrix(0, 0), 2.0 / 3.0, 1e-15);
}

TEST(InverseSqrt, DiagonalAndIdentity) {
  EXPECT_LT((inverse_sqrt(Matrix::Identity(3, 3), 1e-8) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  const Matrix m = (Vector(2) << 4.0, 9.0).finished().asDiagonal();
  const Matrix expected = (Vector(2) << 0.5, 1.0 / 3.0).finished().asDiagonal();
  EXPECT_LT((inverse_sqrt(m, 1e-8) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InverseSqrt, MultiplyBackOnRandomSpd) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Index d = 2 + t % 6;
    const Matrix m = random_spd(rng, d);
    const Matrix r = inverse_sqrt(m, default_min_eig_floor(m));
    EXPECT_EQ(r, r.transpose());
    EXPECT_LT((r * m * r - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((r * r * m - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(InverseSqrt, SingularInputNamesEigenvalue) {
  const Matrix m = (Vector(3) << 2.0, 1.0, 1e-12).finished().asDiagonal();
  try {
    inverse_sqrt(m, 1e-8);
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_NEAR(e.eigenvalue(), 1e-12, 1e-20);
    EXPECT_NE(std::string(e.what()).find("1e-12"), std::string::npos) << e.what();
  }
  EXPECT_THROW(inverse_sqrt(Matrix::Zero(2, 2), 0.0), SingularMatrixError);
}

TEST(EdrBasis, DiagonalLambda) {
  const Matrix lambda = (Vector(3) << 3.0, 2.0, 1.0).finished().asDiagonal();
  CovarianceEstimate cov{Matrix::Identity(3, 3), Vector::Zero(3)};
  const auto basis = edr_basis(lambda, cov, 2, 1e-8);
  EXPECT_EQ(basis.eigenvalues, (Vector(3) << 3.0, 2.0, 1.0).finished());
  EXPECT_LT((basis.eta - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((basis.beta - Matrix::Identity(3, 2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(basis.n_directions, 2);
  EXPECT_TRUE(basis.warnings.empty());
  EXPECT_THROW(edr_basis(lambda, cov, 0, 1e-8), std::out_of_range);
  EXPECT_THROW(edr_basis(lambda, cov, 4, 1e-8), std::out_of_range);
}

TEST(EdrBasis, RankOneLambdaFollowsSignConvention) {
  Vector rho(4);
  rho << 0.2, -0.9, 0.3, 0.1;
  rho.normalize();
  const Matrix lambda = rho * rho.transpose();
  CovarianceEstimate cov{Matrix::Identity(4, 4), Vector::Zero(4)};
  const auto basis = edr_basis(lambda, cov, 1, 1e-8);
  EXPECT_NEAR(basis.eigenvalues(0), 1.0, 1e-12);
  for (Eigen::Index k = 1; k < 4; ++k) EXPECT_NEAR(basis.eigenvalues(k), 0.0, 1e-12);
  // Largest entry of rho is negative, so the convention picks -rho.
  EXPECT_LT((basis.beta.col(0) + rho).cwiseAbs().maxCoeff(), 1e-12);
  // Repeated zero eigenvalues trip the eigengap diagnostic.
  EXPECT_FALSE(basis.warnings.empty());
}

TEST(EdrBasis, WhitensWithCovariance) {
  const Matrix lambda = (Vector(2) << 2.0, 1.0).finished().asDiagonal();
  CovarianceEstimate cov{(Vector(2) << 4.0, 1.0).finished().asDiagonal(), Vector::Zero(2)};
  const auto basis = edr_basis(lambda, cov, 1, 1e-8);
  EXPECT_NEAR(basis.beta(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(basis.beta(1, 0), 0.0, 1e-15);
}

TEST(EdrBasis, SpectralInvariantsOnRandomMatrices) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 40; ++t) {
    const Eigen::Index d = 2 + t % 7;
    const Matrix lambda = random_spd(rng, d);
    CovarianceEstimate cov{random_spd(rng, d), Vector::Zero(d)};
    const auto basis = edr_basis(lambda, cov, 1, 1e-10);
    const double scale = lambda.cwiseAbs().maxCoeff();
    EXPECT_LT((basis.eta.transpose() * basis.eta - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index k = 0; k < d; ++k) {
      EXPECT_LT((lambda * basis.eta.col(k) - basis.eigenvalues(k) * basis.eta.col(k)).cwiseAbs().maxCoeff(),
                1e-8 * scale);
      Eigen::Index arg = 0;
      basis.eta.col(k).cwiseAbs().maxCoeff(&arg);
      EXPECT_GE(basis.eta(arg, k), 0.0);
      if (k > 0) {
        EXPECT_GE(basis.eigenvalues(k - 1), basis.eigenvalues(k));
      }
    }
    const Matrix rebuilt = basis.eta * basis.eigenvalues.asDiagonal() * basis.eta.transpose();
    EXPECT_LT((rebuilt - lambda).cwiseAbs().maxCoeff(), 1e-8 * scale);

    // Positive scaling leaves eigenvectors and their order untouched.
    const auto scaled = edr_basis(Matrix(7.5 * lambda), cov, 1, 1e-10);
    EXPECT_LT((scaled.eta - basis.eta).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((scaled.eigenvalues - 7.5 * basis.eigenvalues).cwiseAbs().maxCoeff(), 1e-9 * scale);

    const auto again = edr_basis(lambda, cov, 1, 1e-10);
    EXPECT_EQ(again.eta, basis.eta);
    EXPECT_EQ(again.eigenvalues, basis.eigenvalues);
    EXPECT_EQ(again.beta, basis.beta);
  }
}

TEST(SubspaceDistance, HandCases) {
  const Matrix e1 = (Matrix(2, 1) << 1.0, 0.0).finished();
  const Matrix e2 = (Matrix(2, 1) << 0.0, 1.0).finished();
  const Matrix diag = (Matrix(2, 1) << 1.0, 1.0).finished() / std::sqrt(2.0);
  EXPECT_NEAR(subspace_distance(e1, e1), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(e1, e2), 1.0, 1e-15);
  EXPECT_NEAR(subspace_distance(e1, diag), 1.0 / std::sqrt(2.0), 1e-15);
  // Scale and sign do not matter.
  EXPECT_NEAR(subspace_distance(e1, Matrix(-3.0 * e1)), 0.0, 1e-15);
  EXPECT_THROW(subspace_distance(Matrix::Zero(3, 1), Matrix::Ones(3, 1)), std::invalid_argument);
  EXPECT_THROW(subspace_distance((Matrix(3, 2) << 1, 2, 1, 2, 1, 2).finished(), Matrix::Identity(3, 2)),
               std::invalid_argument);
  EXPECT_THROW(subspace_distance(e1, Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST(SubspaceDistance, Pseudometric) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 3 + t % 4;
    const Eigen::Index k = 1 + t % 2;
    const Matrix a = random_basis(rng, d, k);
    const Matrix b = random_basis(rng, d, k);
    const Matrix c = random_basis(rng, d, k);
    const double ab = subspace_distance(a, b);
    EXPECT_NEAR(ab, subspace_distance(b, a), 1e-12);
    EXPECT_NEAR(subspace_distance(a, a), 0.0, 1e-12);
    EXPECT_LE(ab, subspace_distance(a, c) + subspace_distance(c, b) + 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(OperatorNorm, DistinctFromVechSupNorm) {
  const Matrix m = (Matrix(2, 2) << 1.0, 1.0, 1.0, 1.0).finished();
  EXPECT_NEAR(operator_norm(m), 2.0, 1e-14);
  EXPECT_EQ(sup_norm(vech(m)), 1.0);
  EXPECT_NEAR(operator_norm((Vector(2) << -3.0, 1.0).finished().asDiagonal().toDenseMatrix()), 3.0, 1e-14);
}

}  // namespace
