// Command-line driver: estimate, convergence, simulate, kernel-check.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 malformed CSV or invalid
// kernel order, 3 bandwidth-schedule violation, 4 singular covariance,
// 5 too many failed replicates.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "edr/edr.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitSingular = 4;
constexpr int kExitReplicates = 5;

struct EstimatorFlags {
  double c1 = 0.13;
  double c2 = 0.01;
  double a_cap = 0.05;
  double bandwidth_multiplier = 1.0;
  int kernel_order = 8;
};

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& f) {
  cmd->add_option("--c1", f.c1, "bandwidth exponent, h = n^-c1 (needs 1/8+c2/4 < c1 < 1/4-c2)")
      ->capture_default_str();
  cmd->add_option("--c2", f.c2, "truncation exponent, b = min(a, n^-c2) (needs 0 < c2 < 1/10)")
      ->capture_default_str();
  cmd->add_option("--a-cap", f.a_cap, "truncation cap a > 0")->capture_default_str();
  cmd->add_option("--bandwidth-multiplier", f.bandwidth_multiplier, "constant in h = C n^-c1")
      ->capture_default_str();
  cmd->add_option("--kernel-order", f.kernel_order, "even kernel order r (moments 1..r vanish)")
      ->capture_default_str();
}

edr::EstimatorConfig make_config(const EstimatorFlags& f) {
  edr::KernelSpec kernel = [&] {
    try {
      return edr::build_order_r_kernel(f.kernel_order);
    } catch (const std::invalid_argument& e) {
      throw edr::ConfigError(e.what());
    }
  }();
  return edr::EstimatorConfig(f.c1, f.c2, f.a_cap, std::move(kernel), f.bandwidth_multiplier);
}

void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-")
    std::cout << contents;
  else
    edr::write_file_atomic(path, contents);
}

unsigned resolve_threads(int flag) {
  return flag > 0 ? static_cast<unsigned>(flag) : edr::default_thread_count();
}

int run_estimate(const std::string& input, const EstimatorFlags& flags, int n_directions,
                 const std::string& output) {
  const edr::EstimatorConfig config = make_config(flags);
  const edr::Sample sample = edr::read_sample_csv(input);
  if (n_directions < 1 || n_directions > sample.d())
    throw std::out_of_range("--n-directions must lie in [1, " + std::to_string(sample.d()) + "]");
  const auto lambda = edr::estimate_lambda(sample, config, edr::default_thread_count());
  const auto cov = edr::empirical_covariance(sample);
  const auto basis = edr::edr_basis(lambda, cov, n_directions);
  for (const auto& w : basis.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& w : config.warnings()) std::cerr << "warning: " << w << '\n';
  emit(output, edr::estimate_json(input, config, sample, lambda, cov, basis).dump(2) + "\n");
  return 0;
}

int run_convergence(const std::string& model_name, int d, double noise_sd, const std::vector<long>& grid_flag,
                    int replicates, std::uint64_t seed, const EstimatorFlags& flags, long oracle_n,
                    long oracle_bins, int threads, const std::string& csv_path, const std::string& json_path) {
  const edr::EstimatorConfig config = make_config(flags);
  const edr::SyntheticModel model = edr::make_model(model_name, d, noise_sd);
  std::vector<Eigen::Index> grid(grid_flag.begin(), grid_flag.end());
  edr::ConvergenceOptions options;
  options.threads = resolve_threads(threads);
  options.oracle_n = oracle_n;
  options.oracle_bins = oracle_bins;
  const auto report = edr::run_convergence(model, config, grid, replicates, seed, options);
  const std::string csv = edr::convergence_csv(report, options);
  const std::string json = edr::convergence_json(report, options).dump(2) + "\n";
  edr::write_file_atomic(csv_path, csv);
  edr::write_file_atomic(json_path, json);

  std::ostringstream line;
  line.precision(4);
  line << "model=" << model.name();
  if (report.fluctuation_fit) {
    line << " slope=" << report.fluctuation_fit->slope;
    if (std::isfinite(report.fluctuation_fit->standard_error))
      line << " (se " << report.fluctuation_fit->standard_error << ")";
  } else {
    line << " slope=none";
  }
  line << " nu=" << report.nu_theory
       << " median_error_decreasing=" << (report.error_strictly_decreasing ? "yes" : "no")
       << " subspace_decreasing=" << (report.subspace_strictly_decreasing ? "yes" : "no");
  if (report.oracle.degenerate) line << " lambda=degenerate(oracle lambda1 < 3 SE)";
  std::cout << line.str() << '\n';
  return 0;
}

int run_simulate(const std::string& model_name, int d, double noise_sd, long n, std::uint64_t seed,
                 const std::string& output) {
  const edr::SyntheticModel model = edr::make_model(model_name, d, noise_sd);
  emit(output, edr::sample_to_csv(edr::generate(model, seed, n)));
  return 0;
}

int run_kernel_check(int order) {
  const edr::KernelSpec kernel = edr::build_order_r_kernel(order);
  constexpr double tol = 1e-9;
  bool all_pass = true;
  std::printf("kernel order %d, sup|K| = %.12g, 512-node Gauss-Legendre\n", order, kernel.sup_bound());
  std::printf("%4s  %24s  %10s  %s\n", "k", "moment", "target", "status");
  for (int k = 0; k <= order + 2; ++k) {
    const double m = edr::kernel_moment(kernel, k);
    std::string target = "-";
    std::string status = "info";
    if (k <= order) {
      const double expected = k == 0 ? 1.0 : 0.0;
      target = k == 0 ? "1" : "0";
      const bool pass = std::abs(m - expected) < tol;
      status = pass ? "pass" : "FAIL";
      all_pass = all_pass && pass;
    }
    std::printf("%4d  %24.16e  %10s  %s\n", k, m, target.c_str(), status.c_str());
  }
  std::printf("%s\n", all_pass ? "all moment conditions hold" : "moment conditions violated");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel estimation of Cov(E[X|Y]) and EDR directions"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: EDR_THREADS, else all cores)");

  EstimatorFlags est_flags;
  std::string est_input;
  std::string est_output;
  int est_directions = 1;
  auto* estimate = app.add_subcommand("estimate", "estimate Λ and EDR directions from a CSV dataset");
  estimate->add_option("csv", est_input, "dataset with header y,x1,...,xd")->required();
  add_estimator_flags(estimate, est_flags);
  estimate->add_option("--n-directions", est_directions, "number of EDR directions N")->capture_default_str();
  estimate->add_option("-o,--output", est_output, "JSON output path (default stdout)");

  EstimatorFlags conv_flags;
  std::string conv_model = "m1";
  int conv_d = 4;
  double conv_noise = 0.2;
  std::vector<long> conv_grid{250, 500, 1000, 2000, 4000};
  int conv_replicates = 50;
  std::uint64_t conv_seed = 0;
  long conv_oracle_n = 1000000;
  long conv_oracle_bins = 0;
  std::string conv_csv = "convergence.csv";
  std::string conv_json = "convergence.json";
  auto* convergence = app.add_subcommand("convergence", "Monte Carlo convergence experiment on a synthetic model");
  convergence->add_option("--model", conv_model, "m1, m2, m3 or noise")->capture_default_str();
  convergence->add_option("--d", conv_d, "predictor dimension")->capture_default_str();
  convergence->add_option("--noise-sd", conv_noise, "noise standard deviation")->capture_default_str();
  convergence->add_option("--grid", conv_grid, "comma-separated increasing sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  convergence->add_option("--replicates", conv_replicates, "replicates per sample size (>= 20)")
      ->capture_default_str();
  convergence->add_option("--seed", conv_seed, "master seed")->required();
  convergence->add_option("--oracle-n", conv_oracle_n, "oracle draws (>= 1e5)")->capture_default_str();
  convergence->add_option("--oracle-bins", conv_oracle_bins, "oracle bins (default ceil(oracle_n^(1/3)) clamped to [50, 500])");
  convergence->add_option("--csv", conv_csv, "per-replicate CSV output")->capture_default_str();
  convergence->add_option("--json", conv_json, "JSON report output")->capture_default_str();
  add_estimator_flags(convergence, conv_flags);

  std::string sim_model = "m1";
  int sim_d = 4;
  double sim_noise = 0.2;
  long sim_n = 1000;
  std::uint64_t sim_seed = 0;
  std::string sim_output;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic sample as CSV");
  simulate->add_option("--model", sim_model, "m1, m2, m3 or noise")->capture_default_str();
  simulate->add_option("--d", sim_d, "predictor dimension")->capture_default_str();
  simulate->add_option("--noise-sd", sim_noise, "noise standard deviation")->capture_default_str();
  simulate->add_option("--n", sim_n, "sample size")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "seed")->required();
  simulate->add_option("-o,--output", sim_output, "CSV output path (default stdout)");

  int check_order = 8;
  auto* kernel_check = app.add_subcommand("kernel-check", "print kernel moments and verify the order conditions");
  kernel_check->add_option("--order", check_order, "even kernel order")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*estimate) return run_estimate(est_input, est_flags, est_directions, est_output);
    if (*convergence)
      return run_convergence(conv_model, conv_d, conv_noise, conv_grid, conv_replicates, conv_seed, conv_flags,
                             conv_oracle_n, conv_oracle_bins, threads, conv_csv, conv_json);
    if (*simulate) return run_simulate(sim_model, sim_d, sim_noise, sim_n, sim_seed, sim_output);
    if (*kernel_check) {
      try {
        return run_kernel_check(check_order);
      } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadInput;
      }
    }
  } catch (const edr::CsvError& e) {
    std::cerr << "error: malformed CSV: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const edr::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const edr::SingularMatrixError& e) {
    std::cerr << "error: empirical covariance of X is singular: " << e.what() << '\n';
    return kExitSingular;
  } catch (const edr::ReplicateFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitReplicates;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
