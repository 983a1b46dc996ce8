#include "steinkd/stein.hpp"

#include "steinkd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace steinkd {

WeightedEmpirical::WeightedEmpirical(PointMatrix points, Vector weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.rows() == 0) throw InputError("weighted empirical measure needs at least one point");
  if (points_.cols() == 0) throw InputError("points must have dimension >= 1");
  require_same_dim(points_.rows(), weights_.size(), "points vs weights");
  if (!points_.allFinite()) throw InputError("all points must be finite");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
      throw InputError("weights must be finite and nonnegative");
    }
  }
  const double total = pairwise_sum(weights_.data(), static_cast<std::size_t>(weights_.size()));
  if (std::abs(total - 1.0) > 1e-12) {
    throw InputError("weights must sum to 1 (got " + format_double(total) + ")");
  }
}

WeightedEmpirical WeightedEmpirical::uniform(PointMatrix points) {
  const auto n = points.rows();
  if (n == 0) throw InputError("weighted empirical measure needs at least one point");
  return WeightedEmpirical(std::move(points), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

SteinKernel::SteinKernel(Target target, KernelSpec kernel, SteinMode mode)
    : target_(std::move(target)), kernel_(std::move(kernel)), mode_(mode) {}

SteinFeatures SteinKernel::features(const PointMatrix& points) const {
  require_same_dim(points.cols(), static_cast<std::ptrdiff_t>(target_.dim()),
                   "sample vs target");
  SteinFeatures f;
  f.direction.resize(points.rows(), points.cols());
  f.scale.resize(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double* x = points.data() + i * points.cols();
    double* d = f.direction.data() + i * points.cols();
    if (mode_ == SteinMode::Langevin) {
      target_.score_into(x, d);
      f.scale[i] = 1.0;
    } else {
      f.scale[i] = target_.diffusion_into(x, d);
      for (Eigen::Index k = 0; k < points.cols(); ++k) d[k] *= 2.0;
    }
    bool finite = std::isfinite(f.scale[i]);
    for (Eigen::Index k = 0; k < points.cols(); ++k) finite = finite && std::isfinite(d[k]);
    if (!finite) {
      throw NumericError("non-finite score or diffusion coefficient at point " + std::to_string(i));
    }
  }
  return f;
}

SteinKernel::PairEvaluator::PairEvaluator(const KernelSpec& kernel, const PointMatrix& points,
                                          const SteinFeatures& features)
    : kernel_(kernel),
      points_(points),
      features_(features),
      dim_(static_cast<std::size_t>(points.cols())),
      buffer_(2 * dim_ + kernel.scratch_size(dim_)) {}

double SteinKernel::PairEvaluator::operator()(std::size_t i, std::size_t j) {
  const std::size_t dim = dim_;
  const double* x = points_.data() + i * dim;
  const double* y = points_.data() + j * dim;
  double* gx = buffer_.data();
  double* gy = gx + dim;
  KernelSpec::RawOutput out{0.0, gx, gy, 0.0};
  kernel_.evaluate_raw(x, y, dim, out, gy + dim);

  const double* dx = features_.direction.data() + i * dim;
  const double* dy = features_.direction.data() + j * dim;
  const double ax = features_.scale[static_cast<Eigen::Index>(i)];
  const double ay = features_.scale[static_cast<Eigen::Index>(j)];
  double dd = 0.0, dx_gy = 0.0, dy_gx = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    dd += dx[k] * dy[k];
    dx_gy += dx[k] * gy[k];
    dy_gx += dy[k] * gx[k];
  }
  // The two gradient terms are added as a unit so that h(x,y) == h(y,x) bitwise.
  const double h = dd * out.value + (ay * dx_gy + ax * dy_gx) + ax * ay * out.cross_trace;
  if (!std::isfinite(h)) {
    throw NumericError("non-finite Stein kernel value at pair (" + std::to_string(i) + ", " +
                       std::to_string(j) + ")");
  }
  return h;
}

double SteinKernel::eval(const VectorRef& x, const VectorRef& y) const {
  require_same_dim(x.size(), y.size(), "stein kernel");
  require_same_dim(x.size(), static_cast<std::ptrdiff_t>(target_.dim()), "stein kernel");
  PointMatrix pts(2, x.size());
  pts.row(0) = x.transpose();
  pts.row(1) = y.transpose();
  const SteinFeatures f = features(pts);
  PairEvaluator h(kernel_, pts, f);
  return h(0, 1);
}

KsdSquared ksd_squared(const SteinKernel& sk, const WeightedEmpirical& q, Estimator estimator) {
  const std::size_t n = q.size();
  if (estimator == Estimator::UStatistic && n < 2) {
    throw InputError("U-statistic needs at least two points");
  }
  const SteinFeatures f = sk.features(q.points());
  const Vector& w = q.weights();
  const bool with_diagonal = estimator == Estimator::VStatistic;

  std::vector<double> rows(n);
  parallel_for(n, [&](std::size_t i) {
    SteinKernel::PairEvaluator h(sk.kernel(), q.points(), f);
    double off = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) off += w[static_cast<Eigen::Index>(j)] * h(i, j);
    double row = 2.0 * off;
    if (with_diagonal) row += w[static_cast<Eigen::Index>(i)] * h(i, i);
    rows[i] = w[static_cast<Eigen::Index>(i)] * row;
  });

  KsdSquared result;
  result.raw = pairwise_sum(rows.data(), n);
  if (estimator == Estimator::UStatistic) {
    const double norm = 1.0 - w.squaredNorm();
    if (!(norm > 0.0)) throw NumericError("U-statistic normalizer vanished (one point carries all mass)");
    result.raw /= norm;
  }
  if (!std::isfinite(result.raw)) throw NumericError("kernel Stein discrepancy is not finite");
  result.clamped = std::max(result.raw, 0.0);
  return result;
}

double coercive_linear_diag(const Target& t, const WeightFunction& w, const VectorRef& x) {
  require_same_dim(x.size(), static_cast<std::ptrdiff_t>(t.dim()), "coercive diagnostic");
  w.validate();
  Vector b(x.size());
  const double a = t.diffusion_into(x.data(), b.data());
  const double sq = x.squaredNorm();
  double wx, c;  // grad w = c x
  w.value_and_radial_coefficient(sq, wx, c);
  const double d = static_cast<double>(x.size());
  return -2.0 * wx * b.dot(x) - a * (wx * d + c * sq);
}

double coercive_imq_diag(const Target& t, double alpha, double w_off, double s,
                         const VectorRef& x) {
  require_same_dim(x.size(), static_cast<std::ptrdiff_t>(t.dim()), "coercive diagnostic");
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
  if (!(w_off > 0.0)) throw InputError("w_off must be positive");
  if (!std::isfinite(alpha)) throw InputError("alpha must be finite");
  Vector b(x.size());
  const double a = t.diffusion_into(x.data(), b.data());
  const double sq = x.squaredNorm();
  const double base = w_off * w_off + sq;
  const double factor = -2.0 * alpha * std::pow(base, s - 1.0);  // g = factor * x
  const double d = static_cast<double>(x.size());
  const double divergence = factor * (d - 2.0 * (1.0 - s) * sq / base);
  return 2.0 * factor * b.dot(x) + a * divergence;
}

double integrability_rate_bound(double S, double nu, double eta, double eps, double q,
                                double theta) {
  if (!(eta > 0.0)) throw InputError("eta must be positive");
  if (!(eps > 0.0)) throw InputError("eps must be positive");
  if (!(theta > 0.0)) throw InputError("theta must be positive");
  if (!(q >= 0.0)) throw InputError("q must be nonnegative");
  if (!(S >= nu)) throw InputError("S must be at least nu");
  const double base = 2.0 * (1.0 + q / theta) * (S - nu) / (eta * eps);
  return std::pow(base, std::max(1.0 / theta, q / theta));
}

PowerProxy power_proxy(const SteinKernel& sk, const WeightedEmpirical& q) {
  return power_proxy(sk, q, sk.features(q.points()));
}

PowerProxy power_proxy(const SteinKernel& sk, const WeightedEmpirical& q,
                       const SteinFeatures& features) {
  const std::size_t n = q.size();
  if (n < 2) throw InputError("power proxy needs at least two points");
  const Vector& w = q.weights();

  // Upper triangle, mirrored; every entry is computed exactly once.
  std::vector<double> gram(n * n);
  parallel_for(n, [&](std::size_t i) {
    SteinKernel::PairEvaluator h(sk.kernel(), q.points(), features);
    for (std::size_t j = i; j < n; ++j) {
      const double v = h(i, j);
      gram[i * n + j] = v;
      gram[j * n + i] = v;
    }
  });

  std::vector<double> row_means(n);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) m += w[static_cast<Eigen::Index>(j)] * gram[i * n + j];
    row_means[i] = m;
    terms[i] = w[static_cast<Eigen::Index>(i)] * m;
  }
  PowerProxy result;
  result.ksd_squared = pairwise_sum(terms.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = row_means[i] - result.ksd_squared;
    terms[i] = w[static_cast<Eigen::Index>(i)] * dev * dev;
  }
  result.variance = pairwise_sum(terms.data(), n);
  if (result.variance < 1e-300) {
    result.degenerate = true;
    result.value = std::numeric_limits<double>::infinity();
  } else {
    result.value = result.ksd_squared / std::sqrt(result.variance);
  }
  return result;
}

double stein_operator(const Target& t, const VectorField& g, const VectorRef& x) {
  require_same_dim(x.size(), static_cast<std::ptrdiff_t>(t.dim()), "stein operator");
  const Diffusion diff = t.diffusion(x);
  const Vector gx = g.value(x);
  require_same_dim(gx.size(), x.size(), "vector field");
  return 2.0 * diff.drift.dot(gx) + diff.scale * g.divergence(x);
}

namespace {

double trapezoid(const Target& t, const VectorField& g, double lower, double upper,
                 std::size_t points) {
  const double step = (upper - lower) / static_cast<double>(points - 1);
  std::vector<double> log_p(points);
  Vector x(1);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    x[0] = lower + step * static_cast<double>(i);
    log_p[i] = t.log_density_unnormalized(x);
    max_log = std::max(max_log, log_p[i]);
  }
  std::vector<double> mass(points), moment(points);
  for (std::size_t i = 0; i < points; ++i) {
    x[0] = lower + step * static_cast<double>(i);
    const double end_factor = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
    const double p = end_factor * std::exp(log_p[i] - max_log);
    mass[i] = p;
    moment[i] = p * stein_operator(t, g, x);
  }
  const double z = pairwise_sum(mass.data(), points);
  if (!(z > 0.0)) throw NumericError("target density has no mass on the quadrature grid");
  return pairwise_sum(moment.data(), points) / z;
}

}  // namespace

double zero_mean_check(const Target& t, const VectorField& g, const QuadratureGrid& grid) {
  if (t.dim() != 1) throw InputError("zero_mean_check needs a one-dimensional target");
  if (!(grid.upper > grid.lower) || grid.points < 3) {
    throw InputError("quadrature grid needs lower < upper and at least 3 points");
  }
  std::size_t points = grid.points;
  double previous = trapezoid(t, g, grid.lower, grid.upper, points);
  for (std::size_t h = 0; h < grid.max_halvings; ++h) {
    points = 2 * points - 1;
    const double current = trapezoid(t, g, grid.lower, grid.upper, points);
    if (std::abs(current - previous) <= grid.tolerance) return current;
    previous = current;
  }
  throw NumericError("quadrature grid too coarse: successive halvings still disagree by more than " +
                     format_double(grid.tolerance));
}

}  // namespace steinkd
