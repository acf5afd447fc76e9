#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace edr {

/// Gauss-Legendre rule on [-1, 1]. Nodes are stored as mirrored pairs so that
/// node[i] == -node[n-1-i] holds bit-exactly.
class GaussLegendre {
 public:
  explicit GaussLegendre(std::size_t n_nodes) : nodes_(n_nodes), weights_(n_nodes) {
    if (n_nodes == 0) throw std::invalid_argument("GaussLegendre: need at least one node");
    const std::size_t half = (n_nodes + 1) / 2;
    const double n = static_cast<double>(n_nodes);
    for (std::size_t i = 0; i < half; ++i) {
      // Tricomi initial guess, then Newton on P_n.
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n_nodes; ++k) {
          const double kk = static_cast<double>(k);
          const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double step = p1 / dp;
        x -= step;
        if (std::abs(step) < 1e-16) break;
      }
      // Recompute derivative at the converged node for the weight.
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n_nodes; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes_[i] = -x;
      nodes_[n_nodes - 1 - i] = x;
      weights_[i] = w;
      weights_[n_nodes - 1 - i] = w;
    }
    if (n_nodes % 2 == 1) nodes_[half - 1] = 0.0;
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Integrates f over [-1, 1]. Mirrored nodes are summed as pairs, which makes
  /// integrals of odd integrands cancel exactly when f(-u) == -f(u) bitwise.
  template <typename F>
  double integrate(F&& f) const {
    const std::size_t n = nodes_.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n / 2; ++i) {
      const double x = nodes_[n - 1 - i];
      sum += weights_[i] * (f(-x) + f(x));
    }
    if (n % 2 == 1) sum += weights_[n / 2] * f(0.0);
    return sum;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// The fixed 512-node rule used for every kernel moment check.
inline const GaussLegendre& moment_rule() {
  static const GaussLegendre rule(512);
  return rule;
}

}  // namespace edr
