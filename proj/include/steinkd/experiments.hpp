#pragma once

#include "steinkd/kernels.hpp"
#include "steinkd/stein.hpp"
#include "steinkd/targets.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace steinkd {

enum class ExperimentKind { MeanShift, VarShift, StudentTMeanShift, MixtureSweep, OnTarget };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

/// 1/sqrt(D) in every coordinate.
Vector unit_diagonal(std::size_t dim);

/// `size` points evenly spaced in log10 between lower and upper, ascending.
std::vector<double> log_grid(double lower, double upper, std::size_t size);
std::vector<double> linear_grid(double lower, double upper, std::size_t size);

// Sample generators. Each is a pure function of its arguments.

/// (1 - 1/(n+1)) P + 1/(n+1) N((n+1) 1bar, I) with P = N(-1bar, I), as two
/// strata of N points each carrying the mixture weight split evenly.
WeightedEmpirical mean_shift_sample(std::uint64_t n, std::size_t N, std::size_t D,
                                    std::uint64_t seed);
/// (1 - 1/(n+1)) N(0, I) + 1/(n+1) N(0, 2(n+1) I), stratified as above.
WeightedEmpirical var_shift_sample(std::uint64_t n, std::size_t N, std::size_t D,
                                   std::uint64_t seed);
/// (1 - 1/(n+1)) t_nu + 1/(n+1) N((n+1) 1bar, I), stratified as above.
WeightedEmpirical t_mean_shift_sample(std::uint64_t n, std::size_t N, std::size_t D, double nu,
                                      std::uint64_t seed);
/// N iid draws from pi N(mu1, I) + (1 - pi) N(mu2, I), equal weights.
WeightedEmpirical mixture_sweep_sample(double pi, std::size_t N, const Vector& mu1,
                                       const Vector& mu2, std::uint64_t seed);
/// N iid draws from a built-in target, equal weights.
WeightedEmpirical target_sample(const Target& target, std::size_t N, std::uint64_t seed);

struct BandwidthChoice {
  double bandwidth = 0.0;
  double objective = 0.0;
};

/// Maximizes the power proxy over the grid, substituting each bandwidth into
/// every radial node of the template kernel. Ties go to the smaller
/// bandwidth; non-finite objectives are skipped.
BandwidthChoice bandwidth_search(const SteinKernel& sk_template, const WeightedEmpirical& q,
                                 std::span<const double> grid);

struct NamedKernel {
  std::string name;
  KernelSpec kernel;
  bool optimize_bandwidth = false;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::MeanShift;
  std::size_t dim = 5;
  std::vector<std::size_t> sample_sizes{500};
  /// Sequence indices n, or mixture ratios pi for MixtureSweep. Unused by OnTarget,
  /// whose rows are indexed by sample size.
  std::vector<double> seq_indices;
  std::vector<NamedKernel> kernels;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;
  SteinMode mode = SteinMode::Langevin;
  double nu = 4.0;
  std::optional<Vector> mixture_mean1;  // default -30 * 1
  std::optional<Vector> mixture_mean2;  // default -10 * 1
  std::optional<Target> target;         // OnTarget only; default N(-1bar, I)
  std::vector<double> bandwidth_grid = log_grid(1e-3, 1e3, 20);

  void validate() const;
  /// Target the discrepancy is measured against.
  Target resolved_target() const;

  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct ResultRow {
  std::string experiment;
  std::string kernel;
  std::size_t kernel_index = 0;
  double seq_index = 0.0;
  std::size_t N = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double ksd = 0.0;
  double ksd_squared_raw = 0.0;
  double bandwidth = 0.0;
  std::string error;  // empty unless the cell failed
};

/// Seed of the sample in one cell. Kernels share samples within a cell.
std::uint64_t cell_seed(std::uint64_t base_seed, double seq_index, std::size_t N, std::size_t rep);

/// Runs every (kernel, N, sequence index, repetition) cell. Rows come back in
/// canonical order; a failing cell yields a row with NaN values and an error.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

inline constexpr const char* kResultCsvHeader =
    "experiment,kernel,seq_index,N,rep,seed,ksd,ksd_squared_raw,bandwidth";
std::string rows_to_csv(const std::vector<ResultRow>& rows);

}  // namespace steinkd
