#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edr/estimator.hpp"
#include "edr/parallel.hpp"
#include "edr/rng.hpp"
#include "edr/sample.hpp"
#include "edr/spectral.hpp"

namespace edr {

// ---------------------------------------------------------------------------
// Synthetic models
// ---------------------------------------------------------------------------

enum class Link {
  SingleIndex,  // m1: Y = b1'X + s e
  DoubleIndex,  // m2: Y = (b1'X)(b2'X + 1) + s e
  Quadratic,    // m3: Y = (b1'X)^2 + s e, E[X|Y] = 0 by symmetry
  PureNoise,    // noise: Y = s e, independent of X
};

inline std::string link_name(Link link) {
  switch (link) {
    case Link::SingleIndex: return "m1";
    case Link::DoubleIndex: return "m2";
    case Link::Quadratic: return "m3";
    case Link::PureNoise: return "noise";
  }
  return "unknown";
}

inline Link parse_link(const std::string& name) {
  if (name == "m1") return Link::SingleIndex;
  if (name == "m2") return Link::DoubleIndex;
  if (name == "m3") return Link::Quadratic;
  if (name == "noise") return Link::PureNoise;
  throw std::invalid_argument("unknown link '" + name + "' (expected m1, m2, m3 or noise)");
}

/// Y = F(B'X, e) with X uniform on the sphere of radius sqrt(d) (so Cov X = I
/// and ||X|| <= sqrt(d)) and e ~ N(0, noise_sd^2) independent of X.
struct SyntheticModel {
  Eigen::Index d = 4;
  Matrix directions;  // d x N, orthonormal columns
  Link link = Link::SingleIndex;
  double noise_sd = 0.2;

  Eigen::Index n_directions() const { return directions.cols(); }
  std::string name() const { return link_name(link); }
};

/// Default directions: b1 = (1,...,1)/sqrt(d); b2 = alternating signs,
/// orthogonalized against b1.
inline Matrix default_directions(Eigen::Index d, Eigen::Index n_directions) {
  if (n_directions < 1 || n_directions > 2 || n_directions >= d)
    throw std::invalid_argument("default directions support 1 or 2 indices with N < d");
  Matrix b(d, n_directions);
  b.col(0) = Vector::Ones(d).normalized();
  if (n_directions == 2) {
    Vector alt(d);
    for (Eigen::Index i = 0; i < d; ++i) alt(i) = (i % 2 == 0) ? 1.0 : -1.0;
    alt -= b.col(0).dot(alt) * b.col(0);
    b.col(1) = alt.normalized();
  }
  return b;
}

inline SyntheticModel make_model(const std::string& name, Eigen::Index d = 4, double noise_sd = 0.2) {
  if (d < 2) throw std::invalid_argument("synthetic models need d >= 2");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw std::invalid_argument("noise_sd must be >= 0");
  SyntheticModel m;
  m.d = d;
  m.link = parse_link(name);
  m.noise_sd = noise_sd;
  m.directions = default_directions(d, m.link == Link::DoubleIndex ? 2 : 1);
  return m;
}

inline void validate_model(const SyntheticModel& model) {
  if (model.d < 2) throw std::invalid_argument("synthetic models need d >= 2");
  if (model.directions.rows() != model.d) throw std::invalid_argument("direction matrix has wrong row count");
  const Eigen::Index needed = model.link == Link::DoubleIndex ? 2 : 1;
  if (model.directions.cols() < needed || model.directions.cols() >= model.d)
    throw std::invalid_argument("link " + model.name() + " needs " + std::to_string(needed) +
                                " direction(s) and N < d");
  const Matrix gram = model.directions.transpose() * model.directions;
  if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("model directions are not orthonormal");
}

/// n x d matrix of i.i.d. rows uniform on the sphere of radius sqrt(d).
inline Matrix sample_sphere_predictors(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  if (d < 2) throw std::invalid_argument("sphere predictors need d >= 2");
  if (n < 0) throw std::invalid_argument("negative sample size");
  RandomStream rng = RandomStream::derived(seed, {0x5851f42dULL});
  const double radius = std::sqrt(static_cast<double>(d));
  Matrix x(n, d);
  Vector z(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
      norm = z.norm();
    } while (norm == 0.0);
    x.row(i) = (radius / norm) * z.transpose();
  }
  return x;
}

inline double apply_link(const SyntheticModel& model, const Eigen::Ref<const Vector>& indices, double eps) {
  const double noise = model.noise_sd * eps;
  switch (model.link) {
    case Link::SingleIndex: return indices(0) + noise;
    case Link::DoubleIndex: return indices(0) * (indices(1) + 1.0) + noise;
    case Link::Quadratic: return indices(0) * indices(0) + noise;
    case Link::PureNoise: return noise;
  }
  throw std::logic_error("unhandled link");
}

inline Sample generate(const SyntheticModel& model, std::uint64_t seed, Eigen::Index n) {
  validate_model(model);
  if (n < 1) throw std::invalid_argument("sample size must be at least 1");
  Matrix x = sample_sphere_predictors(seed, n, model.d);
  RandomStream noise = RandomStream::derived(seed, {0x9e3779b9ULL});
  const Matrix indices = x * model.directions;
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = apply_link(model, indices.row(i).transpose(), noise.normal());
  return Sample(std::move(y), std::move(x));
}

// ---------------------------------------------------------------------------
// Brute-force oracle for Λ = Cov(E[X|Y])
// ---------------------------------------------------------------------------

struct OracleTruth {
  Matrix lambda_true;
  /// Entrywise standard-error estimate |Λ_A - Λ_B| / 2 from two independent halves.
  Matrix se;
  /// max entry of `se`; used as the scalar SE bound.
  double se_bound = 0.0;
  Vector eigenvalues;
  std::string method;
  Eigen::Index oracle_n = 0;
  Eigen::Index n_bins = 0;
  /// λ_1 < 3 se_bound: no direction is distinguishable from zero.
  bool degenerate = false;
};

/// ceil(oracle_n^{1/3}) capped at 500.
inline Eigen::Index default_oracle_bins(Eigen::Index oracle_n) {
  const double root = std::cbrt(static_cast<double>(oracle_n));
  // Never below the 50-bin minimum oracle_lambda enforces.
  return std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(root - 1e-9)), 50, 500);
}

namespace detail {

// Between-bin covariance of equal-count bin means of X sorted by Y, with the
// within-bin sampling noise of each bin mean subtracted.
inline Matrix binned_conditional_covariance(const Matrix& x, const Vector& y, Eigen::Index n_bins) {
  const Eigen::Index n = y.size();
  const Eigen::Index d = x.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return y(a) < y(b); });

  const Vector grand = x.colwise().mean().transpose();
  Matrix between = Matrix::Zero(d, d);
  Matrix within_noise = Matrix::Zero(d, d);
  for (Eigen::Index bin = 0; bin < n_bins; ++bin) {
    const Eigen::Index lo = bin * n / n_bins;
    const Eigen::Index hi = (bin + 1) * n / n_bins;
    const Eigen::Index count = hi - lo;
    if (count < 2) continue;
    Vector mean = Vector::Zero(d);
    for (Eigen::Index k = lo; k < hi; ++k) mean += x.row(order[static_cast<std::size_t>(k)]).transpose();
    mean /= static_cast<double>(count);
    Matrix scatter = Matrix::Zero(d, d);
    for (Eigen::Index k = lo; k < hi; ++k) {
      const Vector c = x.row(order[static_cast<std::size_t>(k)]).transpose() - mean;
      scatter.noalias() += c * c.transpose();
    }
    const Vector shift = mean - grand;
    between.noalias() += static_cast<double>(count) * shift * shift.transpose();
    // E[(x̄_b)(x̄_b)'] carries S_b / n_b on top of the conditional mean term.
    within_noise += scatter / static_cast<double>(count - 1);
  }
  const Matrix centered = x.rowwise() - grand.transpose();
  const Matrix total = centered.transpose() * centered / static_cast<double>(n - 1);
  Matrix out = (between - within_noise + total) / static_cast<double>(n);
  return 0.5 * (out + out.transpose());
}

}  // namespace detail

/// Λ by fine equal-count binning of oracle_n fresh draws. Independent of the
/// kernel estimator; split-half repeat gives the SE.
inline OracleTruth oracle_lambda(const SyntheticModel& model, Eigen::Index oracle_n, Eigen::Index n_bins,
                                 std::uint64_t seed) {
  if (oracle_n < 100000)
    throw std::invalid_argument("oracle needs at least 1e5 draws, got " + std::to_string(oracle_n));
  if (n_bins < 50) throw std::invalid_argument("oracle needs at least 50 bins, got " + std::to_string(n_bins));
  const Sample draws = generate(model, RandomStream::derive_seed(seed, {0x0a11ce5ULL}), oracle_n);
  const Eigen::Index half = oracle_n / 2;

  OracleTruth out;
  out.lambda_true = detail::binned_conditional_covariance(draws.x(), draws.y(), n_bins);
  const Matrix a = detail::binned_conditional_covariance(draws.x().topRows(half), draws.y().head(half), n_bins);
  const Matrix b = detail::binned_conditional_covariance(draws.x().bottomRows(oracle_n - half),
                                                         draws.y().tail(oracle_n - half), n_bins);
  out.se = (a - b).cwiseAbs() / 2.0;
  out.se_bound = out.se.maxCoeff();
  out.eigenvalues = symmetric_eigen(out.lambda_true).values;
  out.oracle_n = oracle_n;
  out.n_bins = n_bins;
  out.method = "equal-count binning of Y (" + std::to_string(n_bins) + " bins, " + std::to_string(oracle_n) +
               " draws); between-bin covariance of X bin means minus within-bin sampling noise; "
               "SE from split-half repeat";
  out.degenerate = out.eigenvalues(0) < 3.0 * out.se_bound;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence experiments
// ---------------------------------------------------------------------------

struct Quantiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quantiles of the finite entries of v.
inline Quantiles quantiles(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

struct ReplicateResult {
  Eigen::Index n = 0;
  int replicate = 0;
  bool ok = false;
  std::string error;
  Matrix lambda_hat;
  double h = 0.0;
  double b = 0.0;
  double sup_error = 0.0;    // ||Vech(Λ̂ - Λ)||∞
  double fluctuation = 0.0;  // ||Vech(Λ̂ - mean_R Λ̂)||∞
  double subspace_distance = 0.0;
  double truncation_frequency = 0.0;
  double top_eigenvalue = 0.0;
};

struct GridPointSummary {
  Eigen::Index n = 0;
  double h = 0.0;
  double b = 0.0;
  int successes = 0;
  int failures = 0;
  Quantiles sup_error;
  Quantiles fluctuation;
  Quantiles subspace_distance;
  double mean_truncation_frequency = 0.0;
  /// Replicate mean of Λ̂_n, the proxy for E(Λ̂_n).
  Matrix replicate_mean;
  /// |Vech(mean_R Λ̂_n - Λ)| entrywise.
  Vector bias;
};

struct SlopeFit {
  double slope = 0.0;
  double standard_error = std::numeric_limits<double>::quiet_NaN();
  double intercept = 0.0;
  int points = 0;
};

/// Ordinary least squares of log(median fluctuation) on log(log(n)/n).
inline std::optional<SlopeFit> fit_fluctuation_slope(const std::vector<GridPointSummary>& grid) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& g : grid) {
    const double n = static_cast<double>(g.n);
    if (g.n < 3 || !(g.fluctuation.median > 0.0)) continue;
    xs.push_back(std::log(std::log(n) / n));
    ys.push_back(std::log(g.fluctuation.median));
  }
  if (xs.size() < 2) return std::nullopt;
  const double m = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / m;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  SlopeFit fit;
  fit.points = static_cast<int>(xs.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (xs.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
      rss += r * r;
    }
    fit.standard_error = std::sqrt(rss / (m - 2.0) / sxx);
  }
  return fit;
}

struct ConvergenceOptions {
  unsigned threads = 1;
  Eigen::Index oracle_n = 1000000;
  /// 0 selects default_oracle_bins(oracle_n).
  Eigen::Index oracle_bins = 0;
};

struct ConvergenceReport {
  SyntheticModel model;
  double c1 = 0.0;
  double c2 = 0.0;
  double a_cap = 0.0;
  int kernel_order = 0;
  std::vector<Eigen::Index> grid;
  int replicates = 0;
  std::uint64_t seed = 0;
  OracleTruth oracle;
  std::vector<ReplicateResult> replicate_results;  // grid-major, replicate-minor
  std::vector<GridPointSummary> summaries;
  /// Absent when Λ is degenerate (oracle λ_1 < 3 SE).
  std::optional<SlopeFit> fluctuation_fit;
  double nu_theory = 0.0;

  // Verdicts, first vs last grid point.
  bool error_strictly_decreasing = false;
  double error_ratio_last_first = 0.0;
  double bias_improved_fraction = 0.0;
  bool subspace_strictly_decreasing = false;
};

/// Raised when more than 10% of replicates fail.
class ReplicateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return !v.empty();
}

/// Runs R replicates of Λ̂_n for each n of the grid against the oracle Λ.
/// Replicate (n, r) draws from a stream keyed on (seed, n, r), and all
/// aggregation is index-ordered, so the report is independent of `threads`.
inline ConvergenceReport run_convergence(const SyntheticModel& model, const EstimatorConfig& config,
                                         const std::vector<Eigen::Index>& grid, int replicates,
                                         std::uint64_t seed, const ConvergenceOptions& options = {}) {
  validate_model(model);
  if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw std::invalid_argument("grid sizes must be positive");
    if (i > 0 && grid[i] <= grid[i - 1]) throw std::invalid_argument("grid must be strictly increasing");
  }
  if (replicates < 20) throw std::invalid_argument("at least 20 replicates are required");

  ConvergenceReport report;
  report.model = model;
  report.c1 = config.c1();
  report.c2 = config.c2();
  report.a_cap = config.a_cap();
  report.kernel_order = config.kernel().order();
  report.grid = grid;
  report.replicates = replicates;
  report.seed = seed;
  report.nu_theory = config.fluctuation_exponent();
  const Eigen::Index bins = options.oracle_bins > 0 ? options.oracle_bins : default_oracle_bins(options.oracle_n);
  report.oracle = oracle_lambda(model, options.oracle_n, bins, RandomStream::derive_seed(seed, {0x0c1eULL}));
  const Matrix& truth = report.oracle.lambda_true;
  const Eigen::Index n_dir = model.n_directions();

  const std::size_t total = grid.size() * static_cast<std::size_t>(replicates);
  report.replicate_results.resize(total);
  parallel_for(total, options.threads, [&](std::size_t task) {
    const std::size_t g = task / static_cast<std::size_t>(replicates);
    const int r = static_cast<int>(task % static_cast<std::size_t>(replicates));
    ReplicateResult& out = report.replicate_results[task];
    out.n = grid[g];
    out.replicate = r;
    try {
      const auto stream = RandomStream::derive_seed(
          seed, {static_cast<std::uint64_t>(grid[g]), static_cast<std::uint64_t>(r)});
      const Sample sample = generate(model, stream, grid[g]);
      const LambdaEstimate est = estimate_lambda(sample, config);
      out.lambda_hat = est.matrix;
      out.h = est.h;
      out.b = est.b;
      out.truncation_frequency = est.truncation_frequency;
      out.sup_error = sup_norm(vech(est.matrix - truth));
      const EDRBasis basis = edr_basis(est, empirical_covariance(sample), n_dir);
      out.top_eigenvalue = basis.eigenvalues(0);
      out.subspace_distance = subspace_distance(basis.beta, model.directions);
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  std::size_t failures = 0;
  for (const auto& r : report.replicate_results) failures += r.ok ? 0 : 1;
  if (static_cast<double>(failures) > 0.1 * static_cast<double>(total))
    throw ReplicateFailure(std::to_string(failures) + " of " + std::to_string(total) +
                           " replicates failed (limit 10%)");

  const Eigen::Index d = model.d;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridPointSummary s;
    s.n = grid[g];
    const auto bw = bandwidths(config, grid[g]);
    s.h = bw.h;
    s.b = bw.b;
    s.replicate_mean = Matrix::Zero(d, d);
    const std::size_t begin = g * static_cast<std::size_t>(replicates);
    const std::size_t end = begin + static_cast<std::size_t>(replicates);
    double trunc = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      const auto& r = report.replicate_results[t];
      if (!r.ok) {
        ++s.failures;
        continue;
      }
      ++s.successes;
      s.replicate_mean += r.lambda_hat;
      trunc += r.truncation_frequency;
    }
    std::vector<double> errs;
    std::vector<double> flucts;
    std::vector<double> dists;
    if (s.successes > 0) {
      s.replicate_mean /= static_cast<double>(s.successes);
      s.mean_truncation_frequency = trunc / static_cast<double>(s.successes);
      for (std::size_t t = begin; t < end; ++t) {
        auto& r = report.replicate_results[t];
        if (!r.ok) continue;
        r.fluctuation = sup_norm(vech(r.lambda_hat - s.replicate_mean));
        errs.push_back(r.sup_error);
        flucts.push_back(r.fluctuation);
        dists.push_back(r.subspace_distance);
      }
    }
    s.sup_error = quantiles(errs);
    s.fluctuation = quantiles(flucts);
    s.subspace_distance = quantiles(dists);
    s.bias = vech(s.replicate_mean - truth).cwiseAbs();
    report.summaries.push_back(std::move(s));
  }

  if (!report.oracle.degenerate) report.fluctuation_fit = fit_fluctuation_slope(report.summaries);

  std::vector<double> med_err;
  std::vector<double> med_dist;
  for (const auto& s : report.summaries) {
    med_err.push_back(s.sup_error.median);
    med_dist.push_back(s.subspace_distance.median);
  }
  report.error_strictly_decreasing = strictly_decreasing(med_err);
  report.subspace_strictly_decreasing = strictly_decreasing(med_dist);
  report.error_ratio_last_first = med_err.back() / med_err.front();
  const Vector& first_bias = report.summaries.front().bias;
  const Vector& last_bias = report.summaries.back().bias;
  Eigen::Index improved = 0;
  for (Eigen::Index i = 0; i < first_bias.size(); ++i) improved += last_bias(i) < first_bias(i) ? 1 : 0;
  report.bias_improved_fraction = static_cast<double>(improved) / static_cast<double>(first_bias.size());
  return report;
}

}  // namespace edr
