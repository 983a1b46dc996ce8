#include "steinkd/experiments.hpp"

#include "steinkd/parallel.hpp"
#include "steinkd/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace steinkd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ExperimentName {
  ExperimentKind kind;
  const char* name;
};

constexpr ExperimentName kNames[] = {
    {ExperimentKind::MeanShift, "mean_shift"},
    {ExperimentKind::VarShift, "var_shift"},
    {ExperimentKind::StudentTMeanShift, "student_t_mean_shift"},
    {ExperimentKind::MixtureSweep, "mixture_sweep"},
    {ExperimentKind::OnTarget, "on_target"},
};

void require_sizes(std::uint64_t n, std::size_t N, std::size_t D) {
  if (n < 1) throw InputError("sequence index n must be >= 1");
  if (N < 1) throw InputError("sample size N must be >= 1");
  if (D < 1) throw InputError("dimension D must be >= 1");
}

template <typename FirstDraw, typename SecondDraw>
WeightedEmpirical two_strata(std::uint64_t n, std::size_t N, std::size_t D, std::uint64_t seed,
                             FirstDraw first, SecondDraw second) {
  const double perturbation = 1.0 / (static_cast<double>(n) + 1.0);
  PointMatrix points(static_cast<Eigen::Index>(2 * N), static_cast<Eigen::Index>(D));
  Vector weights(static_cast<Eigen::Index>(2 * N));
  CounterRng rng_first(hash_seed({seed, 0}));
  CounterRng rng_second(hash_seed({seed, 1}));
  const double w_first = (1.0 - perturbation) / static_cast<double>(N);
  const double w_second = perturbation / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    first(rng_first, points.data() + i * D);
    weights[static_cast<Eigen::Index>(i)] = w_first;
  }
  for (std::size_t i = 0; i < N; ++i) {
    second(rng_second, points.data() + (N + i) * D);
    weights[static_cast<Eigen::Index>(N + i)] = w_second;
  }
  return WeightedEmpirical(std::move(points), std::move(weights));
}

void draw_student_t(CounterRng& rng, double nu, std::size_t D, double* out) {
  for (std::size_t k = 0; k < D; ++k) out[k] = rng.normal();
  const double scale = 1.0 / std::sqrt(rng.chi_squared(nu) / nu);
  for (std::size_t k = 0; k < D; ++k) out[k] *= scale;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& entry : kNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& entry : kNames) {
    if (name == entry.name) return entry.kind;
  }
  throw InputError("unknown experiment '" + name + "'");
}

Vector unit_diagonal(std::size_t dim) {
  return Vector::Constant(static_cast<Eigen::Index>(dim), 1.0 / std::sqrt(static_cast<double>(dim)));
}

std::vector<double> log_grid(double lower, double upper, std::size_t size) {
  if (size == 0 || !(lower > 0.0) || !(upper >= lower)) {
    throw InputError("log grid needs 0 < lower <= upper and a positive size");
  }
  std::vector<double> grid(size);
  const double lo = std::log10(lower);
  const double hi = std::log10(upper);
  for (std::size_t i = 0; i < size; ++i) {
    const double t = size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(size - 1);
    grid[i] = std::pow(10.0, lo + t * (hi - lo));
  }
  return grid;
}

std::vector<double> linear_grid(double lower, double upper, std::size_t size) {
  if (size == 0 || !(upper >= lower)) throw InputError("linear grid needs lower <= upper and size >= 1");
  std::vector<double> grid(size);
  for (std::size_t i = 0; i < size; ++i) {
    const double t = size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(size - 1);
    grid[i] = lower + t * (upper - lower);
  }
  return grid;
}

WeightedEmpirical mean_shift_sample(std::uint64_t n, std::size_t N, std::size_t D,
                                    std::uint64_t seed) {
  require_sizes(n, N, D);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(D));
  const double shift = (static_cast<double>(n) + 1.0) * inv_sqrt_d;
  return two_strata(
      n, N, D, seed,
      [&](CounterRng& rng, double* x) {
        for (std::size_t k = 0; k < D; ++k) x[k] = -inv_sqrt_d + rng.normal();
      },
      [&](CounterRng& rng, double* x) {
        for (std::size_t k = 0; k < D; ++k) x[k] = shift + rng.normal();
      });
}

WeightedEmpirical var_shift_sample(std::uint64_t n, std::size_t N, std::size_t D,
                                   std::uint64_t seed) {
  require_sizes(n, N, D);
  const double spread = std::sqrt(2.0 * (static_cast<double>(n) + 1.0));
  return two_strata(
      n, N, D, seed,
      [&](CounterRng& rng, double* x) {
        for (std::size_t k = 0; k < D; ++k) x[k] = rng.normal();
      },
      [&](CounterRng& rng, double* x) {
        for (std::size_t k = 0; k < D; ++k) x[k] = spread * rng.normal();
      });
}

WeightedEmpirical t_mean_shift_sample(std::uint64_t n, std::size_t N, std::size_t D, double nu,
                                      std::uint64_t seed) {
  require_sizes(n, N, D);
  if (!(nu > 2.0)) throw InputError("degrees of freedom must exceed 2");
  const double shift = (static_cast<double>(n) + 1.0) / std::sqrt(static_cast<double>(D));
  return two_strata(
      n, N, D, seed, [&](CounterRng& rng, double* x) { draw_student_t(rng, nu, D, x); },
      [&](CounterRng& rng, double* x) {
        for (std::size_t k = 0; k < D; ++k) x[k] = shift + rng.normal();
      });
}

WeightedEmpirical mixture_sweep_sample(double pi, std::size_t N, const Vector& mu1,
                                       const Vector& mu2, std::uint64_t seed) {
  if (!(pi >= 0.0 && pi <= 0.5)) throw InputError("mixture ratio must lie in [0, 1/2]");
  if (N < 1) throw InputError("sample size N must be >= 1");
  require_same_dim(mu1.size(), mu2.size(), "mixture means");
  if (mu1.size() == 0) throw InputError("mixture means must have dimension >= 1");
  const auto D = static_cast<std::size_t>(mu1.size());
  PointMatrix points(static_cast<Eigen::Index>(N), mu1.size());
  CounterRng rng(hash_seed({seed, 2}));
  for (std::size_t i = 0; i < N; ++i) {
    const Vector& mu = rng.uniform() < pi ? mu1 : mu2;
    double* x = points.data() + i * D;
    for (std::size_t k = 0; k < D; ++k) x[k] = mu[static_cast<Eigen::Index>(k)] + rng.normal();
  }
  return WeightedEmpirical::uniform(std::move(points));
}

WeightedEmpirical target_sample(const Target& target, std::size_t N, std::uint64_t seed) {
  if (N < 1) throw InputError("sample size N must be >= 1");
  const std::size_t D = target.dim();
  PointMatrix points(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(D));
  CounterRng rng(hash_seed({seed, 3}));
  for (std::size_t i = 0; i < N; ++i) {
    double* x = points.data() + i * D;
    switch (target.kind()) {
      case Target::Kind::Gaussian: {
        const double sd = std::sqrt(target.variance());
        for (std::size_t k = 0; k < D; ++k) {
          x[k] = target.mean()[static_cast<Eigen::Index>(k)] + sd * rng.normal();
        }
        break;
      }
      case Target::Kind::GaussianMixture2: {
        const Vector& mu = rng.uniform() < target.mixture_weight() ? target.mean() : target.mean2();
        for (std::size_t k = 0; k < D; ++k) x[k] = mu[static_cast<Eigen::Index>(k)] + rng.normal();
        break;
      }
      case Target::Kind::StudentT:
        draw_student_t(rng, target.degrees_of_freedom(), D, x);
        break;
      case Target::Kind::Custom:
        throw InputError("cannot sample from a custom target");
    }
  }
  return WeightedEmpirical::uniform(std::move(points));
}

BandwidthChoice bandwidth_search(const SteinKernel& sk_template, const WeightedEmpirical& q,
                                 std::span<const double> grid) {
  if (grid.empty()) throw InputError("bandwidth grid is empty");
  if (q.size() < 2) throw InputError("bandwidth search needs at least two points");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  const SteinFeatures features = sk_template.features(q.points());
  BandwidthChoice best{kNaN, kNaN};
  bool found = false;
  for (double bandwidth : sorted) {
    const SteinKernel sk(sk_template.target(), sk_template.kernel().with_bandwidth(bandwidth),
                         sk_template.mode());
    const PowerProxy proxy = power_proxy(sk, q, features);
    if (proxy.degenerate || !std::isfinite(proxy.value)) continue;
    if (!found || proxy.value > best.objective) {
      best = {bandwidth, proxy.value};
      found = true;
    }
  }
  if (!found) throw NumericError("power proxy is degenerate at every bandwidth in the grid");
  return best;
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw InputError("dim must be >= 1");
  if (sample_sizes.empty()) throw InputError("at least one sample size is required");
  for (std::size_t N : sample_sizes) {
    if (N < 1) throw InputError("sample sizes must be >= 1");
  }
  if (repetitions < 1) throw InputError("repetitions must be >= 1");
  if (kernels.empty()) throw InputError("at least one kernel is required");
  std::set<std::string> names;
  for (const auto& k : kernels) {
    if (k.name.empty() || k.name.find_first_of(",\"\r\n") != std::string::npos) {
      throw InputError("kernel names must be non-empty and free of commas, quotes and newlines");
    }
    if (!names.insert(k.name).second) throw InputError("duplicate kernel name '" + k.name + "'");
    if (k.optimize_bandwidth && !k.kernel.first_bandwidth()) {
      throw InputError("kernel '" + k.name + "' has no bandwidth to optimize");
    }
  }
  if (experiment != ExperimentKind::OnTarget && seq_indices.empty()) {
    throw InputError("seq_indices must be non-empty");
  }
  for (double s : seq_indices) {
    if (experiment == ExperimentKind::MixtureSweep) {
      if (!(s >= 0.0 && s <= 0.5)) throw InputError("mixture ratios must lie in [0, 1/2]");
    } else if (experiment != ExperimentKind::OnTarget) {
      if (!(s >= 1.0) || s != std::floor(s) || s > 9.0e15) {
        throw InputError("sequence indices must be positive integers");
      }
    }
  }
  if (experiment == ExperimentKind::StudentTMeanShift && !(nu > 2.0)) {
    throw InputError("nu must exceed 2");
  }
  for (const auto* mu : {&mixture_mean1, &mixture_mean2}) {
    if (*mu && static_cast<std::size_t>((*mu)->size()) != dim) {
      throw InputError("mixture means must have length dim");
    }
  }
  if (target && target->dim() != dim) throw InputError("target dimension must equal dim");
  for (double b : bandwidth_grid) {
    if (!(b > 0.0)) throw InputError("bandwidth grid values must be positive");
  }
}

Target ExperimentConfig::resolved_target() const {
  switch (experiment) {
    case ExperimentKind::MeanShift: return Target::gaussian(-unit_diagonal(dim));
    case ExperimentKind::VarShift: return Target::gaussian(Vector::Zero(static_cast<Eigen::Index>(dim)));
    case ExperimentKind::StudentTMeanShift: return Target::student_t(nu, dim);
    case ExperimentKind::MixtureSweep:
      return Target::mixture2(
          mixture_mean1.value_or(Vector::Constant(static_cast<Eigen::Index>(dim), -30.0)),
          mixture_mean2.value_or(Vector::Constant(static_cast<Eigen::Index>(dim), -10.0)), 0.5);
    case ExperimentKind::OnTarget:
      return target ? *target : Target::gaussian(-unit_diagonal(dim));
  }
  return Target::gaussian(-unit_diagonal(dim));
}

namespace {

std::vector<double> sequence_from_json(const nlohmann::json& j) {
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw InputError("seq_indices must contain numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (j.is_object()) {
    auto spec = [&](const char* key) {
      const auto& a = j.at(key);
      if (!a.is_array() || a.size() != 3) {
        throw InputError(std::string("seq_indices.") + key + " must be [lower, upper, size]");
      }
      return std::make_tuple(a[0].get<double>(), a[1].get<double>(), a[2].get<std::size_t>());
    };
    if (j.contains("linspace")) {
      auto [lo, hi, n] = spec("linspace");
      return linear_grid(lo, hi, n);
    }
    if (j.contains("logspace")) {
      auto [lo, hi, n] = spec("logspace");
      auto grid = log_grid(lo, hi, n);
      for (double& g : grid) g = std::round(g);
      return grid;
    }
  }
  throw InputError("seq_indices must be an array or {\"linspace\"|\"logspace\": [lower, upper, size]}");
}

Vector vector_field(const nlohmann::json& j, const char* key) {
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw InputError(std::string(key) + " must be an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("experiment config must be a JSON object");
  try {
    ExperimentConfig cfg;
    cfg.experiment = parse_experiment_kind(j.at("experiment").get<std::string>());
    cfg.dim = j.value("dim", std::size_t{5});
    if (j.contains("N")) {
      const auto& n = j.at("N");
      cfg.sample_sizes.clear();
      if (n.is_array()) {
        for (const auto& v : n) cfg.sample_sizes.push_back(v.get<std::size_t>());
      } else {
        cfg.sample_sizes.push_back(n.get<std::size_t>());
      }
    }
    if (j.contains("seq_indices")) cfg.seq_indices = sequence_from_json(j.at("seq_indices"));
    for (const auto& k : j.at("kernels")) {
      NamedKernel nk{k.at("name").get<std::string>(), KernelSpec::from_json(k.at("kernel")),
                     k.value("optimize_bandwidth", false)};
      cfg.kernels.push_back(std::move(nk));
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.repetitions = j.value("repetitions", std::size_t{1});
    const std::string default_mode =
        cfg.experiment == ExperimentKind::StudentTMeanShift ? "diffusion" : "langevin";
    const std::string mode = j.value("mode", default_mode);
    if (mode == "langevin") {
      cfg.mode = SteinMode::Langevin;
    } else if (mode == "diffusion") {
      cfg.mode = SteinMode::DiffusionScalar;
    } else {
      throw InputError("mode must be \"langevin\" or \"diffusion\"");
    }
    cfg.nu = j.value("nu", 4.0);
    if (j.contains("mean1")) cfg.mixture_mean1 = vector_field(j, "mean1");
    if (j.contains("mean2")) cfg.mixture_mean2 = vector_field(j, "mean2");
    if (j.contains("target")) cfg.target = Target::from_json(j.at("target"));
    if (j.contains("bandwidth_grid")) {
      const auto& g = j.at("bandwidth_grid");
      cfg.bandwidth_grid = log_grid(g.value("lower", 1e-3), g.value("upper", 1e3),
                                    g.value("size", std::size_t{20}));
    }
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed experiment config: ") + e.what());
  }
}

std::uint64_t cell_seed(std::uint64_t base_seed, double seq_index, std::size_t N, std::size_t rep) {
  return hash_seed({base_seed, std::bit_cast<std::uint64_t>(seq_index), N, rep});
}

namespace {

struct Cell {
  double seq_index;
  std::size_t N;
  std::size_t rep;
};

WeightedEmpirical build_sample(const ExperimentConfig& cfg, const Target& target, const Cell& cell,
                               std::uint64_t seed) {
  const auto n = static_cast<std::uint64_t>(cell.seq_index);
  switch (cfg.experiment) {
    case ExperimentKind::MeanShift: return mean_shift_sample(n, cell.N, cfg.dim, seed);
    case ExperimentKind::VarShift: return var_shift_sample(n, cell.N, cfg.dim, seed);
    case ExperimentKind::StudentTMeanShift:
      return t_mean_shift_sample(n, cell.N, cfg.dim, cfg.nu, seed);
    case ExperimentKind::MixtureSweep:
      return mixture_sweep_sample(cell.seq_index, cell.N, target.mean(), target.mean2(), seed);
    case ExperimentKind::OnTarget: return target_sample(target, cell.N, seed);
  }
  throw InputError("unknown experiment");
}

std::vector<ResultRow> run_cell(const ExperimentConfig& cfg, const Target& target,
                                const Cell& cell) {
  const std::uint64_t seed = cell_seed(cfg.seed, cell.seq_index, cell.N, cell.rep);
  std::vector<ResultRow> rows;
  std::optional<WeightedEmpirical> sample;
  std::string sample_error;
  try {
    sample.emplace(build_sample(cfg, target, cell, seed));
  } catch (const std::exception& e) {
    sample_error = e.what();
  }
  for (std::size_t k = 0; k < cfg.kernels.size(); ++k) {
    const NamedKernel& nk = cfg.kernels[k];
    ResultRow row;
    row.experiment = to_string(cfg.experiment);
    row.kernel = nk.name;
    row.kernel_index = k;
    row.seq_index = cell.seq_index;
    row.N = cell.N;
    row.rep = cell.rep;
    row.seed = seed;
    row.bandwidth = nk.kernel.first_bandwidth().value_or(kNaN);
    try {
      if (!sample) throw InputError(sample_error);
      KernelSpec kernel = nk.kernel;
      if (nk.optimize_bandwidth) {
        const SteinKernel probe(target, kernel, cfg.mode);
        const BandwidthChoice choice = bandwidth_search(probe, *sample, cfg.bandwidth_grid);
        kernel = kernel.with_bandwidth(choice.bandwidth);
        row.bandwidth = choice.bandwidth;
      }
      const KsdSquared value = ksd_squared(SteinKernel(target, kernel, cfg.mode), *sample);
      row.ksd_squared_raw = value.raw;
      row.ksd = std::sqrt(value.clamped);
    } catch (const std::exception& e) {
      row.ksd = kNaN;
      row.ksd_squared_raw = kNaN;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Target target = cfg.resolved_target();

  std::vector<Cell> cells;
  for (std::size_t N : cfg.sample_sizes) {
    if (cfg.experiment == ExperimentKind::OnTarget) {
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        cells.push_back({static_cast<double>(N), N, r});
      }
      continue;
    }
    for (double s : cfg.seq_indices) {
      for (std::size_t r = 0; r < cfg.repetitions; ++r) cells.push_back({s, N, r});
    }
  }

  std::vector<std::vector<ResultRow>> per_cell(cells.size());
  auto body = [&](std::size_t c) { per_cell[c] = run_cell(cfg, target, cells[c]); };
  if (cells.size() >= thread_count()) {
    parallel_for(cells.size(), body);
  } else {
    for (std::size_t c = 0; c < cells.size(); ++c) body(c);
  }

  std::vector<ResultRow> rows;
  for (auto& group : per_cell) {
    for (auto& row : group) rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.kernel_index, a.N, a.seq_index, a.rep) <
           std::tie(b.kernel_index, b.N, b.seq_index, b.rep);
  });
  return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << kResultCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.experiment << ',' << r.kernel << ',' << format_double(r.seq_index) << ',' << r.N << ','
        << r.rep << ',' << r.seed << ',' << format_double(r.ksd) << ','
        << format_double(r.ksd_squared_raw) << ',' << format_double(r.bandwidth) << '\n';
  }
  return out.str();
}

}  // namespace steinkd
