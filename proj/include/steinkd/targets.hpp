#pragma once

#include "steinkd/common.hpp"
#include "steinkd/kernels.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace steinkd {

/// Drift b and scalar covariance multiplier a of the diffusion that targets p,
/// with 2 b = a grad log p + grad a.
struct Diffusion {
  Vector drift;
  double scale = 1.0;
};

/// Unnormalized target density.
///
/// Built-in kinds are isotropic Gaussians, two-component unit-variance Gaussian
/// mixtures and the standard multivariate Student-t. Gaussian kinds use the
/// Langevin diffusion (a = 1, b = score / 2); the Student-t uses
/// a(x) = 1 + |x|^2 / nu.
class Target {
 public:
  enum class Kind { Gaussian, GaussianMixture2, StudentT, Custom };

  /// Black-box target for library users. drift and scale default to the
  /// Langevin diffusion when left empty.
  struct CustomFunctions {
    std::size_t dim = 0;
    std::function<Vector(const VectorRef&)> score;
    std::function<double(const VectorRef&)> log_density;
    std::function<Vector(const VectorRef&)> drift;
    std::function<double(const VectorRef&)> scale;
    int growth_exponent = 0;
  };

  static Target gaussian(Vector mean, double variance = 1.0);
  static Target mixture2(Vector mean1, Vector mean2, double pi);
  static Target student_t(double nu, std::size_t dim);
  static Target custom(CustomFunctions functions);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  /// 0 when a is bounded, 1 when a grows quadratically.
  int growth_exponent() const;

  Vector score(const VectorRef& x) const;
  double log_density_unnormalized(const VectorRef& x) const;
  Diffusion diffusion(const VectorRef& x) const;
  /// Posterior probability of the first mixture component. Mixtures only.
  double mixture_posterior(const VectorRef& x) const;

  /// Hot-path variants writing into caller storage; no dimension checks.
  void score_into(const double* x, double* out) const;
  double diffusion_into(const double* x, double* drift) const;

  /// a(.) expressed as a weight function when it has that form.
  std::optional<WeightFunction> diffusion_weight() const;

  /// Dissipativity rate alpha and coefficient growth constant lambda_a of the
  /// diffusion, when known in closed form.
  std::optional<double> dissipativity_alpha() const;
  std::optional<double> coefficient_growth_constant() const;

  // Parameters.
  const Vector& mean() const { return mean1_; }
  const Vector& mean2() const { return mean2_; }
  double variance() const { return variance_; }
  double mixture_weight() const { return pi_; }
  double degrees_of_freedom() const { return nu_; }

  nlohmann::json to_json() const;
  static Target from_json(const nlohmann::json& j);

 private:
  Target() = default;
  void check_dim(const VectorRef& x, const char* what) const;

  Kind kind_ = Kind::Gaussian;
  std::size_t dim_ = 0;
  Vector mean1_;
  Vector mean2_;
  double variance_ = 1.0;
  double pi_ = 0.5;
  double nu_ = 0.0;
  std::shared_ptr<const CustomFunctions> custom_;
};

}  // namespace steinkd
