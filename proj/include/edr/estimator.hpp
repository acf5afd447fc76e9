#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "edr/kernels.hpp"
#include "edr/parallel.hpp"
#include "edr/sample.hpp"
#include "edr/summation.hpp"

namespace edr {

/// Raised when the bandwidth schedule violates its admissibility constraints.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bandwidth schedule h_n = multiplier * n^{-c1}, b_n = min(a, n^{-c2}).
class EstimatorConfig {
 public:
  EstimatorConfig(double c1, double c2, double a_cap, KernelSpec kernel,
                  double bandwidth_multiplier = 1.0)
      : c1_(c1), c2_(c2), a_cap_(a_cap), multiplier_(bandwidth_multiplier),
        kernel_(std::move(kernel)) {
    validate();
  }

  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double a_cap() const { return a_cap_; }
  double bandwidth_multiplier() const { return multiplier_; }
  const KernelSpec& kernel() const { return kernel_; }

  /// ν = 1/2 - 2(c1 + c2), the fluctuation rate exponent.
  double fluctuation_exponent() const { return 0.5 - 2.0 * (c1_ + c2_); }

  /// Non-fatal notes; kernels of order below 8 cannot reach β > 7.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (kernel_.order() < 8)
      out.push_back("kernel order " + std::to_string(kernel_.order()) +
                    " is below 8; the smoothness requirement r>6 is not met");
    return out;
  }

 private:
  void validate() const {
    auto fail = [&](const std::string& rule) {
      std::ostringstream msg;
      msg << "bandwidth exponents (c1=" << c1_ << ", c2=" << c2_ << ") violate " << rule;
      throw ConfigError(msg.str());
    };
    if (!std::isfinite(c1_) || !std::isfinite(c2_)) fail("finiteness of c₁, c₂");
    if (!(c1_ > 0.0)) fail("c₁>0");
    if (!(c2_ > 0.0 && c2_ < 0.1)) fail("0<c₂<1/10");
    if (!(0.125 + c2_ / 4.0 < c1_)) fail("1/8+c₂/4<c₁");
    if (!(c1_ < 0.25 - c2_)) fail("c₁<1/4−c₂");
    if (!(a_cap_ > 0.0) || !std::isfinite(a_cap_)) {
      std::ostringstream msg;
      msg << "truncation cap a=" << a_cap_ << " violates a>0";
      throw ConfigError(msg.str());
    }
    if (!(multiplier_ > 0.0) || !std::isfinite(multiplier_))
      throw ConfigError("bandwidth multiplier must be positive");
  }

  double c1_;
  double c2_;
  double a_cap_;
  double multiplier_;
  KernelSpec kernel_;
};

struct Bandwidths {
  double h;
  double b;
};

inline Bandwidths bandwidths(const EstimatorConfig& config, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  const double nn = static_cast<double>(n);
  return {config.bandwidth_multiplier() * std::pow(nn, -config.c1()),
          std::min(config.a_cap(), std::pow(nn, -config.c2()))};
}

/// f̂_n(y) = (1/(n h)) Σ_i K((y - Y_i)/h). May be negative for higher-order kernels.
inline double estimate_density(const Sample& sample, const KernelSpec& kernel, double h, double y) {
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < sample.n(); ++i) acc.add(kernel((y - sample.y()(i)) / h));
  return acc.value() / (static_cast<double>(sample.n()) * h);
}

/// ĝ_{j,n}(y) = (1/(n h)) Σ_i X_ij K((y - Y_i)/h). `j` is zero-based.
inline double estimate_g(const Sample& sample, const KernelSpec& kernel, double h, Eigen::Index j,
                         double y) {
  if (j < 0 || j >= sample.d())
    throw std::out_of_range("coordinate index " + std::to_string(j) + " outside [0, " +
                            std::to_string(sample.d()) + ")");
  if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    acc.add(sample.x()(i, j) * kernel((y - sample.y()(i)) / h));
  return acc.value() / (static_cast<double>(sample.n()) * h);
}

/// max(f̂_n(y), b).
inline double truncated_density(const Sample& sample, const KernelSpec& kernel, double h, double b,
                                double y) {
  if (!(b > 0.0)) throw std::invalid_argument("truncation level must be positive");
  return std::max(estimate_density(sample, kernel, h, y), b);
}

/// R̂_b(y) = ĝ_n(y) / max(f̂_n(y), b).
struct RatioVector {
  Vector values;
  double at = 0.0;
  double density = 0.0;  // untruncated f̂_n(at)
  bool truncated = false;
};

namespace detail {

// Sorted view of the responses; windowed sums skip only terms where K is exactly 0.
class SortedResponses {
 public:
  explicit SortedResponses(const Sample& sample) : sample_(sample), order_(sample.n()) {
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return sample.y()(a) < sample.y()(b); });
    sorted_.resize(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) sorted_[k] = sample.y()(order_[k]);
  }

  RatioVector ratio(const KernelSpec& kernel, double h, double b, double y) const {
    const Eigen::Index d = sample_.d();
    const double reach = h * (1.0 + 1e-9);
    const auto first = std::lower_bound(sorted_.begin(), sorted_.end(), y - reach) - sorted_.begin();
    const auto last = std::upper_bound(sorted_.begin(), sorted_.end(), y + reach) - sorted_.begin();
    CompensatedSum density;
    std::vector<CompensatedSum> numer(static_cast<std::size_t>(d));
    for (auto k = first; k < last; ++k) {
      const Eigen::Index i = order_[static_cast<std::size_t>(k)];
      const double w = kernel((y - sorted_[static_cast<std::size_t>(k)]) / h);
      if (w == 0.0) continue;
      density.add(w);
      for (Eigen::Index j = 0; j < d; ++j) numer[static_cast<std::size_t>(j)].add(sample_.x()(i, j) * w);
    }
    const double scale = static_cast<double>(sample_.n()) * h;
    RatioVector out;
    out.at = y;
    out.density = density.value() / scale;
    out.truncated = out.density < b;
    const double denom = std::max(out.density, b);
    out.values.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
      out.values(j) = (numer[static_cast<std::size_t>(j)].value() / scale) / denom;
    return out;
  }

 private:
  const Sample& sample_;
  std::vector<Eigen::Index> order_;
  std::vector<double> sorted_;
};

}  // namespace detail

inline RatioVector ratio_vector(const Sample& sample, const EstimatorConfig& config, double y) {
  const auto [h, b] = bandwidths(config, sample.n());
  return detail::SortedResponses(sample).ratio(config.kernel(), h, b, y);
}

/// Λ̂_n = (1/n) Σ_i R̂_b(Y_i) R̂_b(Y_i)^T together with the (n, h, b) it used.
struct LambdaEstimate {
  Matrix matrix;
  Eigen::Index n = 0;
  double h = 0.0;
  double b = 0.0;
  /// Fraction of sample points where f̂_n(Y_i) < b and the floor engaged.
  double truncation_frequency = 0.0;
};

/// The ratio vectors are evaluated in parallel; the outer-product reduction
/// runs in index order so the result is independent of `threads`.
inline LambdaEstimate estimate_lambda(const Sample& sample, const EstimatorConfig& config,
                                      unsigned threads = 1) {
  const auto [h, b] = bandwidths(config, sample.n());
  const Eigen::Index n = sample.n();
  const Eigen::Index d = sample.d();
  const detail::SortedResponses sorted(sample);
  Matrix ratios(n, d);
  std::vector<char> truncated(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    const auto r = sorted.ratio(config.kernel(), h, b, sample.y()(static_cast<Eigen::Index>(i)));
    ratios.row(static_cast<Eigen::Index>(i)) = r.values.transpose();
    truncated[i] = r.truncated ? 1 : 0;
  });

  LambdaEstimate out;
  out.n = n;
  out.h = h;
  out.b = b;
  out.matrix.resize(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = k; l < d; ++l) {
      CompensatedSum acc;
      for (Eigen::Index i = 0; i < n; ++i) acc.add(ratios(i, k) * ratios(i, l));
      const double v = acc.value() / static_cast<double>(n);
      out.matrix(k, l) = v;
      out.matrix(l, k) = v;
    }
  }
  out.truncation_frequency =
      static_cast<double>(std::count(truncated.begin(), truncated.end(), 1)) / static_cast<double>(n);
  return out;
}

/// Stacks the lower triangle column by column: (a11..ad1, a22..ad2, ..., add).
inline Vector vech(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("vech requires a square matrix");
  const Eigen::Index d = m.rows();
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = k + 1; l < d; ++l)
      if (std::abs(m(k, l) - m(l, k)) > 1e-10)
        throw std::invalid_argument("vech requires a symmetric matrix; entries (" +
                                    std::to_string(k) + "," + std::to_string(l) + ") differ");
  Vector out(d * (d + 1) / 2);
  Eigen::Index pos = 0;
  for (Eigen::Index col = 0; col < d; ++col)
    for (Eigen::Index row = col; row < d; ++row) out(pos++) = m(row, col);
  return out;
}

/// max_i |v_i|.
inline double sup_norm(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("sup_norm of an empty vector");
  return v.cwiseAbs().maxCoeff();
}

}  // namespace edr
