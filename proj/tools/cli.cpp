#include "cli.hpp"

#include "steinkd/experiments.hpp"
#include "steinkd/io.hpp"
#include "steinkd/kernel_check.hpp"
#include "steinkd/parallel.hpp"
#include "steinkd/stein.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

namespace steinkd::cli {

namespace {

// A JSON argument is either inline JSON or a path to a JSON file.
nlohmann::json load_json(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return nlohmann::json::parse(arg);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("invalid JSON argument: ") + e.what());
    }
  }
  return read_json_file(arg);
}

Target load_target(const std::string& arg) {
  try {
    return Target::from_json(load_json(arg));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid target: ") + e.what());
  }
}

KernelSpec load_kernel(const std::string& arg) {
  try {
    return KernelSpec::from_json(load_json(arg));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid kernel: ") + e.what());
  }
}

struct KsdArgs {
  std::string target, kernel, sample, mode = "langevin";
  bool u_statistic = false;
};

int cmd_ksd(const KsdArgs& a, std::ostream& out) {
  const Target target = load_target(a.target);
  const KernelSpec kernel = load_kernel(a.kernel);
  const WeightedEmpirical sample = read_sample_csv_file(a.sample, target.dim());
  const SteinMode mode = a.mode == "diffusion" ? SteinMode::DiffusionScalar : SteinMode::Langevin;
  const KsdSquared v = ksd_squared(SteinKernel(target, kernel, mode), sample,
                                   a.u_statistic ? Estimator::UStatistic : Estimator::VStatistic);
  if (!std::isfinite(v.raw)) throw NumericError("KSD is not finite");
  out << "ksd=" << format_double(std::sqrt(v.clamped))
      << " ksd_squared_raw=" << format_double(v.raw) << '\n';
  return kSuccess;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path,
                   std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_json(read_json_file(config_path));
  } catch (const NumericError& e) {
    throw InputError(e.what());
  }
  cfg.validate();
  const auto rows = run_experiment(cfg);

  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw InputError("cannot write " + out_path);
  file << rows_to_csv(rows);
  file.close();
  if (!file) throw InputError("failed writing " + out_path);

  std::size_t failed = 0;
  for (const auto& r : rows) {
    if (r.error.empty()) continue;
    ++failed;
    err << "cell failed: kernel=" << r.kernel << " N=" << r.N
        << " seq_index=" << format_double(r.seq_index) << " rep=" << r.rep << ": " << r.error
        << '\n';
  }
  out << "rows=" << rows.size() << '\n';
  return failed == 0 ? kSuccess : kNumericError;
}

int cmd_check_kernels(const std::string& kernel_arg, std::optional<std::size_t> dim,
                      std::size_t trials, std::ostream& out) {
  const KernelSpec kernel = load_kernel(kernel_arg);
  KernelCheckOptions options;
  if (dim) options.dims = {*dim};
  options.trials = trials;
  const KernelCheckReport r = check_kernel(kernel_functions(kernel), options);
  out << "pairs=" << r.pairs_checked << '\n'
      << "max_rel_err_grad_x=" << format_double(r.max_err_grad_x) << '\n'
      << "max_rel_err_grad_y=" << format_double(r.max_err_grad_y) << '\n'
      << "max_rel_err_cross_trace=" << format_double(r.max_err_cross_trace) << '\n'
      << "max_rel_asymmetry=" << format_double(r.max_asymmetry) << '\n'
      << "min_gram_eigenvalue=" << format_double(r.min_eigenvalue) << '\n';
  for (const auto& f : r.failures) out << "FAIL " << f << '\n';
  out << (r.passed() ? "result=pass" : "result=fail") << '\n';
  return r.passed() ? kSuccess : kValidationFailure;
}

struct DiagnoseArgs {
  std::string target, sample;
  double p = 0.0;
  double v = 1.0;
  std::optional<double> eta, nu, theta, eps;
  double q = 1.0;
};

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  const Target target = load_target(a.target);
  const WeightedEmpirical sample = read_sample_csv_file(a.sample, target.dim());
  const WeightFunction w{a.v, a.p, 1.0};
  w.validate();

  const auto alpha = target.dissipativity_alpha();
  const auto lambda = target.coefficient_growth_constant();
  if (target.growth_exponent() == 1 && alpha && lambda && a.p >= 2.0 * *alpha / *lambda) {
    err << "warning: weight exponent " << format_double(a.p)
        << " is not below 2*alpha/lambda_a = " << format_double(2.0 * *alpha / *lambda)
        << "; the coercive lower bound is not guaranteed\n";
  }

  std::vector<double> terms(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const Eigen::Map<const Vector> x(sample.point(i), static_cast<Eigen::Index>(sample.dim()));
    terms[i] = sample.weights()[static_cast<Eigen::Index>(i)] * coercive_linear_diag(target, w, x);
  }
  const double mean = pairwise_sum(terms.data(), terms.size());
  if (!std::isfinite(mean)) throw NumericError("diagnostic mean is not finite");
  out << "n=" << sample.size() << '\n'
      << "weight_exponent=" << format_double(a.p) << '\n'
      << "mean_diagnostic=" << format_double(mean) << '\n';

  const bool any = a.eta || a.nu || a.theta || a.eps;
  const bool all = a.eta && a.nu && a.theta && a.eps;
  if (any && !all) throw InputError("--eta, --nu, --theta and --eps must be given together");
  if (all) {
    // Below nu the tail mass bound is vacuous; report the zero-base value.
    const double s = std::max(mean, *a.nu);
    if (mean < *a.nu) err << "note: mean diagnostic is below nu; bound evaluated at S = nu\n";
    out << "integrability_rate_bound="
        << format_double(integrability_rate_bound(s, *a.nu, *a.eta, *a.eps, a.q, *a.theta))
        << '\n';
  }
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel Stein discrepancy toolkit", "steinkd"};
  app.require_subcommand(1);

  KsdArgs ksd;
  auto* ksd_cmd = app.add_subcommand("ksd", "KSD of a weighted sample against a target");
  ksd_cmd->add_option("--target", ksd.target, "target JSON (inline or file)")->required();
  ksd_cmd->add_option("--kernel", ksd.kernel, "kernel JSON (inline or file)")->required();
  ksd_cmd->add_option("--sample", ksd.sample, "sample CSV")->required();
  ksd_cmd->add_option("--mode", ksd.mode, "Stein operator")
      ->check(CLI::IsMember({"langevin", "diffusion"}));
  ksd_cmd->add_flag("--u-statistic", ksd.u_statistic, "drop the diagonal terms");

  std::string config, out_path;
  auto* exp_cmd = app.add_subcommand("experiment", "run an experiment config");
  exp_cmd->add_option("--config", config, "experiment JSON")->required();
  exp_cmd->add_option("--out", out_path, "output CSV")->required();

  std::string check_kernel_arg;
  std::optional<std::size_t> check_dim;
  std::size_t check_trials = 100;
  auto* check_cmd = app.add_subcommand("check-kernels", "finite-difference and PSD checks");
  check_cmd->add_option("--kernel", check_kernel_arg, "kernel JSON (inline or file)")->required();
  check_cmd->add_option("--dim", check_dim, "single dimension (default 1, 2 and 5)")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--trials", check_trials, "random pairs per dimension")
      ->check(CLI::PositiveNumber);

  DiagnoseArgs diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "coercive moment diagnostic");
  diag_cmd->add_option("--target", diag.target, "target JSON (inline or file)")->required();
  diag_cmd->add_option("--sample", diag.sample, "sample CSV")->required();
  diag_cmd->add_option("--weight-exponent", diag.p, "exponent p of w(x) = (v^2+|x|^2)^p")
      ->required();
  diag_cmd->add_option("--v", diag.v, "weight offset v");
  diag_cmd->add_option("--eta", diag.eta, "coercivity constant eta");
  diag_cmd->add_option("--nu", diag.nu, "offset nu of the diagnostic bound");
  diag_cmd->add_option("--theta", diag.theta, "growth exponent theta");
  diag_cmd->add_option("--eps", diag.eps, "tail mass level epsilon");
  diag_cmd->add_option("--q", diag.q, "moment order q");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*ksd_cmd) return cmd_ksd(ksd, out);
    if (*exp_cmd) return cmd_experiment(config, out_path, out, err);
    if (*check_cmd) return cmd_check_kernels(check_kernel_arg, check_dim, check_trials, out);
    if (*diag_cmd) return cmd_diagnose(diag, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericError;
  }
  return kInputError;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace steinkd::cli
