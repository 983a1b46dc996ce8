#include "steinkd/kernel_check.hpp"

#include "steinkd/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace steinkd {

KernelFunctions kernel_functions(const KernelSpec& spec) {
  return {
      [spec](const VectorRef& x, const VectorRef& y) { return spec.eval(x, y); },
      [spec](const VectorRef& x, const VectorRef& y) { return spec.grad_x(x, y); },
      [spec](const VectorRef& x, const VectorRef& y) { return spec.grad_y(x, y); },
      [spec](const VectorRef& x, const VectorRef& y) { return spec.cross_trace(x, y); },
  };
}

namespace {

Vector random_point(CounterRng& rng, std::size_t dim) {
  Vector x(static_cast<Eigen::Index>(dim));
  for (auto& v : x) v = 1.5 * rng.normal();
  return x;
}

double scaled_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max(std::abs(numeric), floor);
}

double scaled_error(const Vector& analytic, const Vector& numeric, double floor) {
  const double diff = (analytic - numeric).lpNorm<Eigen::Infinity>();
  return diff / std::max(numeric.lpNorm<Eigen::Infinity>(), floor);
}

}  // namespace

KernelCheckReport check_kernel(const KernelFunctions& k, const KernelCheckOptions& options) {
  KernelCheckReport report;
  const double floor = options.abs_tol / options.rel_tol;
  const double h = options.step;
  CounterRng rng(options.seed);

  for (std::size_t dim : options.dims) {
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
      const Vector x = random_point(rng, dim);
      const Vector y = random_point(rng, dim);
      const auto d = static_cast<Eigen::Index>(dim);

      Vector fd_gx(d), fd_gy(d);
      double fd_trace = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x, yp = y, ym = y;
        xp[i] += h;
        xm[i] -= h;
        yp[i] += h;
        ym[i] -= h;
        fd_gx[i] = (k.eval(xp, y) - k.eval(xm, y)) / (2.0 * h);
        fd_gy[i] = (k.eval(x, yp) - k.eval(x, ym)) / (2.0 * h);
        fd_trace += (k.grad_x(x, yp)[i] - k.grad_x(x, ym)[i]) / (2.0 * h);
      }
      const double e_gx = scaled_error(k.grad_x(x, y), fd_gx, floor);
      const double e_gy = scaled_error(k.grad_y(x, y), fd_gy, floor);
      const double e_tr = scaled_error(k.cross_trace(x, y), fd_trace, floor);
      const double kxy = k.eval(x, y);
      const double asym = std::abs(kxy - k.eval(y, x)) / std::max(std::abs(kxy), floor);

      report.max_err_grad_x = std::max(report.max_err_grad_x, e_gx);
      report.max_err_grad_y = std::max(report.max_err_grad_y, e_gy);
      report.max_err_cross_trace = std::max(report.max_err_cross_trace, e_tr);
      report.max_asymmetry = std::max(report.max_asymmetry, asym);
      ++report.pairs_checked;
    }
  }

  auto check = [&](double err, const char* what) {
    if (!(err <= options.rel_tol)) {
      report.failures.push_back(std::string(what) + " error " + format_double(err) +
                                " exceeds " + format_double(options.rel_tol));
    }
  };
  check(report.max_err_grad_x, "grad_x");
  check(report.max_err_grad_y, "grad_y");
  check(report.max_err_cross_trace, "cross_trace");
  check(report.max_asymmetry, "symmetry");

  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  const std::size_t psd_dim = options.dims.empty() ? 2 : options.dims.back();
  for (std::size_t set = 0; set < options.psd_sets; ++set) {
    const auto m = static_cast<Eigen::Index>(options.psd_set_size);
    std::vector<Vector> pts;
    for (Eigen::Index i = 0; i < m; ++i) pts.push_back(random_point(rng, psd_dim));
    Eigen::MatrixXd gram(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) gram(i, j) = k.eval(pts[i], pts[j]);
    }
    gram = 0.5 * (gram + gram.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
    // Tolerance is relative to the largest diagonal entry once that exceeds 1.
    const double scale = std::max(1.0, gram.diagonal().maxCoeff());
    const double min_eig = solver.eigenvalues().minCoeff() / scale;
    report.min_eigenvalue = std::min(report.min_eigenvalue, min_eig);
  }
  if (options.psd_sets > 0 && report.min_eigenvalue < -options.psd_tol) {
    report.failures.push_back("Gram matrix has eigenvalue " + format_double(report.min_eigenvalue));
  }
  return report;
}

KernelSpec random_kernel_spec(std::uint64_t seed, int max_depth) {
  CounterRng rng(seed);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  auto leaf = [&]() {
    switch (rng.next_u64() % 4) {
      case 0: return KernelSpec::imq(uniform(0.5, 2.0), uniform(0.5, 2.0), uniform(-0.9, -0.1));
      case 1: return KernelSpec::eq(uniform(0.7, 2.0));
      case 2: return KernelSpec::matern32(uniform(0.7, 2.0));
      default: return KernelSpec::normalized_linear(uniform(1.0, 2.0));
    }
  };
  auto build = [&](auto& self, int depth) -> KernelSpec {
    if (depth <= 0) return leaf();
    switch (rng.next_u64() % 3) {
      case 0: return leaf();
      case 1: {
        WeightFunction w{uniform(1.0, 2.0), uniform(0.0, 0.8), uniform(0.5, 2.0)};
        return KernelSpec::tilted(w, self(self, depth - 1));
      }
      default: return KernelSpec::sum(self(self, depth - 1), self(self, depth - 1));
    }
  };
  // The root is always a composite so every random spec exercises composition.
  if (max_depth <= 0) return leaf();
  if (rng.next_u64() % 2 == 0) {
    WeightFunction w{uniform(1.0, 2.0), uniform(0.0, 0.8), uniform(0.5, 2.0)};
    return KernelSpec::tilted(w, build(build, max_depth - 1));
  }
  return KernelSpec::sum(build(build, max_depth - 1), build(build, max_depth - 1));
}

}  // namespace steinkd
