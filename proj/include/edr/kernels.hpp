#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "edr/quadrature.hpp"

namespace edr {

// Kernels on [-1, 1] of the form
//
//   K(u) = w(u) * sum_{j=0}^{m} a_j p_j(u),   w(u) = 3/4 (1 - u^2),
//
// where p_j are the monic polynomials orthogonal for the Epanechnikov weight w
// (Gegenbauer, lambda = 3/2) and a_j = p_j(0) / ||p_j||^2. This is the
// reproducing kernel of polynomials of degree <= m evaluated at 0, hence
// int u^k K(u) du = 0^k for every k <= m. Taking m = r gives a kernel whose
// moments 1..r vanish.
class KernelSpec {
 public:
  /// Highest k for which int u^k K(u) du = 0 is guaranteed (and all lower k >= 1).
  int order() const { return order_; }
  double support_halfwidth() const { return 1.0; }
  /// Coefficients a_0..a_m of the expansion in the monic orthogonal basis.
  const std::vector<double>& coefficients() const { return coefficients_; }
  /// D = sup |K(u)|.
  double sup_bound() const { return sup_bound_; }

  double operator()(double u) const {
    if (!(std::abs(u) <= 1.0)) return 0.0;
    // Evaluated at |u| so that K(-u) == K(u) bitwise.
    const double x = std::abs(u);
    double p_prev = 1.0;
    double p_cur = x;
    double sum = coefficients_[0];
    for (std::size_t j = 1; j < coefficients_.size(); ++j) {
      sum += coefficients_[j] * p_cur;
      const double next = x * p_cur - recurrence_gamma(j) * p_prev;
      p_prev = p_cur;
      p_cur = next;
    }
    return 0.75 * (1.0 - x * x) * sum;
  }

  /// gamma_j in p_{j+1}(u) = u p_j(u) - gamma_j p_{j-1}(u) for the weight w.
  static double recurrence_gamma(std::size_t j) {
    const double jj = static_cast<double>(j);
    return jj * (jj + 2.0) / ((2.0 * jj + 1.0) * (2.0 * jj + 3.0));
  }

  static KernelSpec reproducing(int degree, int order) {
    const auto m = static_cast<std::size_t>(degree);
    std::vector<double> coeffs(m + 1, 0.0);
    // p_j(0) via the recurrence at u = 0, norms as products of gammas.
    double p_prev = 1.0;
    double p_cur = 0.0;
    double norm_sq = 1.0;
    coeffs[0] = 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      norm_sq *= recurrence_gamma(j);
      coeffs[j] = p_cur / norm_sq;
      const double next = -recurrence_gamma(j) * p_prev;
      p_prev = p_cur;
      p_cur = next;
    }
    KernelSpec k;
    k.order_ = order;
    k.coefficients_ = std::move(coeffs);
    k.sup_bound_ = k.compute_sup_bound();
    return k;
  }

 private:
  KernelSpec() = default;

  double compute_sup_bound() const {
    constexpr int grid = 2048;
    std::vector<double> values(grid + 1);
    for (int i = 0; i <= grid; ++i) values[i] = std::abs((*this)(static_cast<double>(i) / grid));
    double best = *std::max_element(values.begin(), values.end());
    // Golden-section refinement around every interior local maximum of |K|.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i <= grid; ++i) {
      const double left = i > 0 ? values[i - 1] : -1.0;
      const double right = i < grid ? values[i + 1] : -1.0;
      if (values[i] < left || values[i] < right) continue;
      double lo = std::max(0.0, static_cast<double>(i - 1) / grid);
      double hi = std::min(1.0, static_cast<double>(i + 1) / grid);
      for (int it = 0; it < 80; ++it) {
        const double a = hi - inv_phi * (hi - lo);
        const double b = lo + inv_phi * (hi - lo);
        if (std::abs((*this)(a)) > std::abs((*this)(b))) hi = b; else lo = a;
      }
      best = std::max(best, std::abs((*this)(0.5 * (lo + hi))));
    }
    return best * (1.0 + 1e-12);
  }

  int order_ = 0;
  std::vector<double> coefficients_;
  double sup_bound_ = 0.0;
};

/// Symmetric compactly supported kernel with vanishing moments 1..r.
inline KernelSpec build_order_r_kernel(int r) {
  if (r <= 0) throw std::invalid_argument("kernel order must be positive, got " + std::to_string(r));
  if (r % 2 != 0)
    throw std::invalid_argument("kernel order must be even, got " + std::to_string(r));
  return KernelSpec::reproducing(r, r);
}

/// K(u) = 3/4 (1 - u^2) on [-1, 1]; only its first moment vanishes.
inline KernelSpec epanechnikov() { return KernelSpec::reproducing(0, 1); }

/// int_{-1}^{1} u^k K(u) du under the fixed 512-node Gauss-Legendre rule.
inline double kernel_moment(const KernelSpec& kernel, int k) {
  if (k < 0) throw std::invalid_argument("moment index must be nonnegative");
  return moment_rule().integrate([&](double u) {
    double p = 1.0;
    for (int i = 0; i < k; ++i) p *= u;
    return p * kernel(u);
  });
}

/// int_{-1}^{1} K(u)^2 du, used for variance diagnostics.
inline double kernel_roughness(const KernelSpec& kernel) {
  return moment_rule().integrate([&](double u) { return kernel(u) * kernel(u); });
}

}  // namespace edr
