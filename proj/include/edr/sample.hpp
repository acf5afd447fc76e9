#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace edr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// i.i.d. observations (Y_i, X_i), i = 1..n. Row i of x() is X_i.
class Sample {
 public:
  Sample(Vector y, Matrix x) : y_(std::move(y)), x_(std::move(x)) {
    if (y_.size() < 1) throw std::invalid_argument("sample must contain at least one observation");
    if (x_.cols() < 1) throw std::invalid_argument("sample must have at least one predictor");
    if (x_.rows() != y_.size())
      throw std::invalid_argument("response length " + std::to_string(y_.size()) +
                                  " does not match predictor rows " + std::to_string(x_.rows()));
    if (!y_.allFinite()) throw std::invalid_argument("response contains non-finite values");
    if (!x_.allFinite()) throw std::invalid_argument("predictors contain non-finite values");
    max_norm_ = x_.rowwise().norm().maxCoeff();
  }

  Eigen::Index n() const { return y_.size(); }
  Eigen::Index d() const { return x_.cols(); }
  const Vector& y() const { return y_; }
  const Matrix& x() const { return x_; }
  /// max_i ||X_i||, the observed bound on the predictors.
  double max_row_norm() const { return max_norm_; }

 private:
  Vector y_;
  Matrix x_;
  double max_norm_ = 0.0;
};

}  // namespace edr
