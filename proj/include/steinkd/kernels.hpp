#pragma once

#include "steinkd/common.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

namespace steinkd {

enum class RadialFamily { IMQ, EQ, Matern32 };

/// Translation-invariant kernel Phi(x - y) with unit value at coincident points
/// (IMQ with offset 1).
///
///   IMQ:      (c^2 + r^2 / sigma^2)^beta
///   EQ:       exp(-r^2 / (2 sigma^2))
///   Matern32: (1 + sqrt(3) r / sigma) exp(-sqrt(3) r / sigma)
struct RadialKernel {
  RadialFamily family = RadialFamily::IMQ;
  double bandwidth = 1.0;
  double imq_offset = 1.0;
  double imq_exponent = -0.5;

  void validate() const;
};

/// w(x) = scale * (v^2 + |x|^2)^exponent.
///
/// The scale factor lets the same node express the scalar diffusion coefficient
/// of a target, e.g. 1 + |x|^2 / nu = (1/nu) (nu + |x|^2).
struct WeightFunction {
  double v = 1.0;
  double exponent = 0.0;
  double scale = 1.0;

  /// Weight for the linear-growth recommendation: exponent (q + theta - 1) / 2.
  static WeightFunction linear_growth(double q, double theta, double v = 1.0);
  /// Weight for the quadratic-growth recommendation: exponent (q + theta) / 2.
  static WeightFunction quadratic_growth(double q, double theta, double v = 1.0);

  void validate() const;

  double operator()(const VectorRef& x) const;
  Vector gradient(const VectorRef& x) const;

  /// Value and radial coefficient c with grad w(x) = c * x, given |x|^2.
  void value_and_radial_coefficient(double sq_norm, double& value, double& coefficient) const;
};

/// All first-order information of a kernel at one pair of points.
struct KernelDerivatives {
  double value = 0.0;
  Vector grad_x;
  Vector grad_y;
  double cross_trace = 0.0;  // sum_i d^2 k / dx_i dy_i
};

/// Immutable composable scalar kernel.
///
/// Node kinds: a radial kernel, the normalized linear kernel
/// (v^2 + <x,y>) / (sqrt(v^2 + |x|^2) sqrt(v^2 + |y|^2)), a tilt
/// w(x) w(y) k(x, y), and the sum of two kernels. Copies share the tree.
class KernelSpec {
 public:
  enum class Kind { Radial, NormalizedLinear, Tilted, Sum };

  static KernelSpec radial(const RadialKernel& params);
  static KernelSpec imq(double bandwidth = 1.0, double offset = 1.0, double exponent = -0.5);
  static KernelSpec eq(double bandwidth = 1.0);
  static KernelSpec matern32(double bandwidth = 1.0);
  static KernelSpec normalized_linear(double v = 1.0);
  static KernelSpec tilted(const WeightFunction& weight, const KernelSpec& child);
  static KernelSpec sum(const KernelSpec& left, const KernelSpec& right);

  /// w(x) w(y) (base(x - y) + normalized_linear(x, y)), the recommended
  /// moment-controlling kernel.
  static KernelSpec tilted_sum(const KernelSpec& base, const WeightFunction& weight,
                               double linear_v = 1.0);

  Kind kind() const;
  const RadialKernel& radial_params() const;
  double linear_v() const;
  const WeightFunction& weight() const;
  const KernelSpec& child() const;
  const KernelSpec& left() const;
  const KernelSpec& right() const;

  double eval(const VectorRef& x, const VectorRef& y) const;
  Vector grad_x(const VectorRef& x, const VectorRef& y) const;
  Vector grad_y(const VectorRef& x, const VectorRef& y) const;
  double cross_trace(const VectorRef& x, const VectorRef& y) const;
  KernelDerivatives derivatives(const VectorRef& x, const VectorRef& y) const;

  /// Allocation-free evaluation for inner loops. grad_x and grad_y must hold
  /// dim doubles; scratch must hold scratch_size(dim) doubles.
  struct RawOutput {
    double value;
    double* grad_x;
    double* grad_y;
    double cross_trace;
  };
  std::size_t scratch_size(std::size_t dim) const;
  void evaluate_raw(const double* x, const double* y, std::size_t dim, RawOutput& out,
                    double* scratch) const;

  /// Copy with every radial node's bandwidth replaced.
  KernelSpec with_bandwidth(double bandwidth) const;
  /// Bandwidth of the first radial node in depth-first order, if any.
  std::optional<double> first_bandwidth() const;

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);

 private:
  struct Node;
  explicit KernelSpec(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

}  // namespace steinkd
