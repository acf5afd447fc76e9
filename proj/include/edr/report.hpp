#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edr/csv.hpp"
#include "edr/estimator.hpp"
#include "edr/simlab.hpp"
#include "edr/spectral.hpp"

namespace edr {

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline nlohmann::json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::json to_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

/// Row-major nested arrays.
inline nlohmann::json to_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

inline nlohmann::json to_json(const Quantiles& q) {
  return {{"q1", number(q.q1)}, {"median", number(q.median)}, {"q3", number(q.q3)}};
}

}  // namespace detail

inline nlohmann::json estimator_config_json(const EstimatorConfig& config) {
  return {{"c1", config.c1()},
          {"c2", config.c2()},
          {"a_cap", config.a_cap()},
          {"bandwidth_multiplier", config.bandwidth_multiplier()},
          {"kernel_order", config.kernel().order()},
          {"kernel_sup_bound", config.kernel().sup_bound()},
          {"nu", config.fluctuation_exponent()}};
}

/// Output document of `estimate`. Eigenvectors are the columns of `eta`; `beta`
/// holds one direction per entry.
inline nlohmann::json estimate_json(const std::string& input, const EstimatorConfig& config,
                                    const Sample& sample, const LambdaEstimate& lambda,
                                    const CovarianceEstimate& cov, const EDRBasis& basis) {
  nlohmann::json beta = nlohmann::json::array();
  for (Eigen::Index k = 0; k < basis.beta.cols(); ++k) beta.push_back(detail::to_json(Vector(basis.beta.col(k))));
  nlohmann::json eta = nlohmann::json::array();
  for (Eigen::Index k = 0; k < basis.eta.cols(); ++k) eta.push_back(detail::to_json(Vector(basis.eta.col(k))));
  nlohmann::json warnings = basis.warnings;
  for (const auto& w : config.warnings()) warnings.push_back(w);
  return {{"schema_version", kSchemaVersion},
          {"command", "estimate"},
          {"config",
           {{"input", input}, {"n_directions", basis.n_directions}, {"estimator", estimator_config_json(config)}}},
          {"n", sample.n()},
          {"d", sample.d()},
          {"max_row_norm", sample.max_row_norm()},
          {"h", lambda.h},
          {"b", lambda.b},
          {"truncation_frequency", lambda.truncation_frequency},
          {"lambda", detail::to_json(lambda.matrix)},
          {"vech_lambda", detail::to_json(vech(lambda.matrix))},
          {"eigenvalues", detail::to_json(basis.eigenvalues)},
          {"eta", eta},
          {"beta", beta},
          {"covariance", detail::to_json(cov.matrix)},
          {"mean", detail::to_json(cov.mean)},
          {"warnings", warnings}};
}

inline nlohmann::json convergence_config_json(const ConvergenceReport& r, const ConvergenceOptions& options) {
  return {{"model",
           {{"link", r.model.name()},
            {"d", r.model.d},
            {"n_directions", r.model.n_directions()},
            {"noise_sd", r.model.noise_sd},
            {"directions", detail::to_json(r.model.directions)},
            {"predictor_law", "uniform on the sphere of radius sqrt(d)"}}},
          {"estimator", {{"c1", r.c1}, {"c2", r.c2}, {"a_cap", r.a_cap}, {"kernel_order", r.kernel_order}}},
          {"grid", r.grid},
          {"replicates", r.replicates},
          {"seed", r.seed},
          {"oracle_n", options.oracle_n},
          {"oracle_bins", r.oracle.n_bins}};
}

/// The threads setting is deliberately absent: the report does not depend on it.
inline nlohmann::json convergence_json(const ConvergenceReport& r, const ConvergenceOptions& options) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    grid.push_back({{"n", s.n},
                    {"h", s.h},
                    {"b", s.b},
                    {"successes", s.successes},
                    {"failures", s.failures},
                    {"sup_error", detail::to_json(s.sup_error)},
                    {"fluctuation", detail::to_json(s.fluctuation)},
                    {"subspace_distance", detail::to_json(s.subspace_distance)},
                    {"mean_truncation_frequency", detail::number(s.mean_truncation_frequency)},
                    {"replicate_mean_lambda", detail::to_json(s.replicate_mean)},
                    {"abs_bias_vech", detail::to_json(s.bias)}});
  }
  nlohmann::json fit = nullptr;
  if (r.fluctuation_fit) {
    const auto& f = *r.fluctuation_fit;
    fit = {{"slope", f.slope},
           {"standard_error", detail::number(f.standard_error)},
           {"intercept", f.intercept},
           {"points", f.points},
           {"t_statistic", detail::number(f.slope / f.standard_error)},
           {"nu_theory", r.nu_theory},
           {"regressor", "log(log(n)/n)"},
           {"response", "log(median fluctuation)"}};
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& rep : r.replicate_results)
    if (!rep.ok) failures.push_back({{"n", rep.n}, {"replicate", rep.replicate}, {"error", rep.error}});

  return {{"schema_version", kSchemaVersion},
          {"command", "convergence"},
          {"config", convergence_config_json(r, options)},
          {"oracle",
           {{"lambda", detail::to_json(r.oracle.lambda_true)},
            {"se", detail::to_json(r.oracle.se)},
            {"se_bound", r.oracle.se_bound},
            {"eigenvalues", detail::to_json(r.oracle.eigenvalues)},
            {"degenerate", r.oracle.degenerate},
            {"method", r.oracle.method}}},
          {"grid", grid},
          {"fluctuation_fit", fit},
          {"verdicts",
           {{"median_error_strictly_decreasing", r.error_strictly_decreasing},
            {"median_error_ratio_last_first", detail::number(r.error_ratio_last_first)},
            {"bias_improved_fraction", r.bias_improved_fraction},
            {"median_subspace_distance_strictly_decreasing", r.subspace_strictly_decreasing},
            {"degenerate_lambda", r.oracle.degenerate}}},
          {"notes",
           {"E(Lambda_hat_n) is proxied by the across-replicate mean at each n",
            "almost-sure convergence is checked through the sample-path proxy: monotone decay of the median "
            "sup-norm error along the grid",
            "fluctuation slope is reported against nu = 1/2 - 2(c1+c2) and not gated"}},
          {"failures", failures}};
}

/// One row per (n, replicate), grid-major. Starts with a `#` header line
/// carrying the resolved configuration.
inline std::string convergence_csv(const ConvergenceReport& r, const ConvergenceOptions& options) {
  std::string out = "# " + convergence_config_json(r, options).dump() + "\n";
  out += "n,replicate,status,h,b,sup_error,fluctuation,subspace_distance,truncation_frequency,top_eigenvalue\n";
  for (const auto& rep : r.replicate_results) {
    out += std::to_string(rep.n) + "," + std::to_string(rep.replicate) + "," + (rep.ok ? "ok" : "failed");
    if (rep.ok) {
      for (double v : {rep.h, rep.b, rep.sup_error, rep.fluctuation, rep.subspace_distance,
                       rep.truncation_frequency, rep.top_eigenvalue}) {
        out += ',';
        out += format_double(v);
      }
    } else {
      out += ",,,,,,,";
    }
    out += '\n';
  }
  return out;
}

}  // namespace edr
