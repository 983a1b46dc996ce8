#pragma once

#include "steinkd/common.hpp"
#include "steinkd/kernels.hpp"
#include "steinkd/targets.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace steinkd {

/// Finitely supported probability measure sum_i w_i delta_{x_i}.
class WeightedEmpirical {
 public:
  /// Weights must be nonnegative and sum to 1 within 1e-12.
  WeightedEmpirical(PointMatrix points, Vector weights);
  static WeightedEmpirical uniform(PointMatrix points);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const PointMatrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  const double* point(std::size_t i) const { return points_.data() + i * dim(); }

 private:
  PointMatrix points_;
  Vector weights_;
};

enum class SteinMode {
  Langevin,         // T g = <grad log p, g> + div g
  DiffusionScalar,  // T g = 2 <b, g> + a div g
};

/// Per-point quantities the Stein kernel needs: the direction field
/// (score, or 2b in diffusion mode) and the scalar coefficient (1, or a).
struct SteinFeatures {
  PointMatrix direction;
  Vector scale;
};

/// Stein kernel h_p(x, y) for kappa = k * Id:
///
///   h = <d(x), d(y)> k + a(y) <d(x), grad_y k> + a(x) <d(y), grad_x k>
///       + a(x) a(y) sum_i d^2 k / dx_i dy_i
///
/// with d = grad log p, a = 1 (Langevin) or d = 2b, a = a(x) (diffusion).
class SteinKernel {
 public:
  SteinKernel(Target target, KernelSpec kernel, SteinMode mode = SteinMode::Langevin);

  const Target& target() const { return target_; }
  const KernelSpec& kernel() const { return kernel_; }
  SteinMode mode() const { return mode_; }

  double eval(const VectorRef& x, const VectorRef& y) const;

  SteinFeatures features(const PointMatrix& points) const;

  /// Reusable per-thread evaluator over precomputed features.
  class PairEvaluator {
   public:
    PairEvaluator(const KernelSpec& kernel, const PointMatrix& points,
                  const SteinFeatures& features);
    double operator()(std::size_t i, std::size_t j);

   private:
    const KernelSpec& kernel_;
    const PointMatrix& points_;
    const SteinFeatures& features_;
    std::size_t dim_;
    std::vector<double> buffer_;
  };

 private:
  Target target_;
  KernelSpec kernel_;
  SteinMode mode_;
};

enum class Estimator { VStatistic, UStatistic };

struct KsdSquared {
  double raw = 0.0;      // value as summed, may be a tiny negative from roundoff
  double clamped = 0.0;  // max(raw, 0)
};

/// sum_{i,j} w_i w_j h(x_i, x_j) (V-statistic) or the off-diagonal sum
/// renormalized by 1 - sum_i w_i^2 (U-statistic). Rows are summed
/// independently and combined by pairwise reduction, so the result is the
/// same for every thread count.
KsdSquared ksd_squared(const SteinKernel& sk, const WeightedEmpirical& q,
                       Estimator estimator = Estimator::VStatistic);

/// T_P g(x) for g(x) = -w(x) x.
double coercive_linear_diag(const Target& t, const WeightFunction& w, const VectorRef& x);

/// T_P g(x) for g(x) = -2 alpha x / (w_off^2 + |x|^2)^(1 - s), s in (0, 1).
double coercive_imq_diag(const Target& t, double alpha, double w_off, double s,
                         const VectorRef& x);

/// {2 (1 + q/theta) (S - nu) / (eta eps)}^(max(1/theta, q/theta)): the
/// radius beyond which the tail q-th moment mass is at most eps.
double integrability_rate_bound(double S, double nu, double eta, double eps, double q,
                                double theta);

struct PowerProxy {
  double value = 0.0;  // ksd^2 / sqrt(variance); +inf when degenerate
  double ksd_squared = 0.0;
  double variance = 0.0;
  bool degenerate = false;
};

/// KSD^2 / sqrt(v) with v the weighted variance of the row means
/// m_i = sum_j w_j h(x_i, x_j).
PowerProxy power_proxy(const SteinKernel& sk, const WeightedEmpirical& q);
/// Same, reusing features computed by sk.features(q.points()).
PowerProxy power_proxy(const SteinKernel& sk, const WeightedEmpirical& q,
                       const SteinFeatures& features);

/// Closed-form vector field with its divergence.
struct VectorField {
  std::function<Vector(const VectorRef&)> value;
  std::function<double(const VectorRef&)> divergence;
};

/// T_P g(x) = 2 <b(x), g(x)> + a(x) div g(x).
double stein_operator(const Target& t, const VectorField& g, const VectorRef& x);

struct QuadratureGrid {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t points = 2001;
  double tolerance = 1e-10;     // allowed change between successive halvings
  std::size_t max_halvings = 8;
};

/// Trapezoid estimate of E_P[T_P g] for a one-dimensional target. The step is
/// halved until two successive estimates agree within the tolerance.
double zero_mean_check(const Target& t, const VectorField& g, const QuadratureGrid& grid);

}  // namespace steinkd
