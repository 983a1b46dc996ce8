#include "steinkd/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace steinkd {

namespace {

double sq_dist(const double* x, const Vector& mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double d = x[i] - mu[i];
    s += d * d;
  }
  return s;
}

double sq_norm(const double* x, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += x[i] * x[i];
  return s;
}

// log(pi p1(x)) and log((1-pi) p2(x)) up to a shared constant.
void mixture_logits(const double* x, const Vector& mu1, const Vector& mu2, double pi, double& l1,
                    double& l2) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  l1 = pi > 0.0 ? std::log(pi) - 0.5 * sq_dist(x, mu1) : neg_inf;
  l2 = pi < 1.0 ? std::log1p(-pi) - 0.5 * sq_dist(x, mu2) : neg_inf;
}

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

Vector vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw InputError(std::string("target field '") + key + "' must be an array of numbers");
  }
  const auto& arr = j.at(key);
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw InputError(std::string("target field '") + key + "' must contain only numbers");
    }
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

double number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("target field '") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

void require_finite_vector(const Vector& v, const char* what) {
  if (v.size() == 0) throw InputError(std::string(what) + " must have dimension >= 1");
  if (!v.allFinite()) throw InputError(std::string(what) + " must be finite");
}

}  // namespace

Target Target::gaussian(Vector mean, double variance) {
  require_finite_vector(mean, "gaussian mean");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw InputError("gaussian variance must be positive");
  }
  Target t;
  t.kind_ = Kind::Gaussian;
  t.dim_ = static_cast<std::size_t>(mean.size());
  t.mean1_ = std::move(mean);
  t.variance_ = variance;
  return t;
}

Target Target::mixture2(Vector mean1, Vector mean2, double pi) {
  require_finite_vector(mean1, "mixture mean1");
  require_finite_vector(mean2, "mixture mean2");
  require_same_dim(mean1.size(), mean2.size(), "mixture means");
  if (!(pi >= 0.0 && pi <= 1.0)) throw InputError("mixture weight must lie in [0, 1]");
  Target t;
  t.kind_ = Kind::GaussianMixture2;
  t.dim_ = static_cast<std::size_t>(mean1.size());
  t.mean1_ = std::move(mean1);
  t.mean2_ = std::move(mean2);
  t.pi_ = pi;
  return t;
}

Target Target::student_t(double nu, std::size_t dim) {
  if (!(nu > 2.0) || !std::isfinite(nu)) {
    throw InputError("student-t degrees of freedom must exceed 2 for a dissipative diffusion");
  }
  if (dim == 0) throw InputError("student-t dimension must be at least 1");
  Target t;
  t.kind_ = Kind::StudentT;
  t.dim_ = dim;
  t.nu_ = nu;
  return t;
}

Target Target::custom(CustomFunctions functions) {
  if (functions.dim == 0) throw InputError("custom target dimension must be at least 1");
  if (!functions.score) throw InputError("custom target needs a score function");
  if (functions.growth_exponent != 0 && functions.growth_exponent != 1) {
    throw InputError("custom target growth exponent must be 0 or 1");
  }
  if (static_cast<bool>(functions.drift) != static_cast<bool>(functions.scale)) {
    throw InputError("custom target must supply both drift and scale, or neither");
  }
  Target t;
  t.kind_ = Kind::Custom;
  t.dim_ = functions.dim;
  t.custom_ = std::make_shared<const CustomFunctions>(std::move(functions));
  return t;
}

int Target::growth_exponent() const {
  switch (kind_) {
    case Kind::StudentT: return 1;
    case Kind::Custom: return custom_->growth_exponent;
    default: return 0;
  }
}

void Target::check_dim(const VectorRef& x, const char* what) const {
  require_same_dim(x.size(), static_cast<std::ptrdiff_t>(dim_), what);
}

void Target::score_into(const double* x, double* out) const {
  switch (kind_) {
    case Kind::Gaussian:
      for (std::size_t i = 0; i < dim_; ++i) out[i] = -(x[i] - mean1_[i]) / variance_;
      return;
    case Kind::GaussianMixture2: {
      double l1, l2;
      mixture_logits(x, mean1_, mean2_, pi_, l1, l2);
      const double post = std::exp(l1 - log_sum_exp(l1, l2));
      for (std::size_t i = 0; i < dim_; ++i) {
        const double s1 = -(x[i] - mean1_[i]);
        const double s2 = -(x[i] - mean2_[i]);
        out[i] = post * s1 + (1.0 - post) * s2;
      }
      return;
    }
    case Kind::StudentT: {
      const double c = -(nu_ + static_cast<double>(dim_)) / nu_ / (1.0 + sq_norm(x, dim_) / nu_);
      for (std::size_t i = 0; i < dim_; ++i) out[i] = c * x[i];
      return;
    }
    case Kind::Custom: {
      Eigen::Map<const Vector> xv(x, static_cast<Eigen::Index>(dim_));
      const Vector s = custom_->score(xv);
      require_same_dim(s.size(), static_cast<std::ptrdiff_t>(dim_), "custom score");
      std::copy(s.data(), s.data() + dim_, out);
      return;
    }
  }
}

double Target::diffusion_into(const double* x, double* drift) const {
  switch (kind_) {
    case Kind::StudentT: {
      const double c = -(nu_ + static_cast<double>(dim_) - 2.0) / (2.0 * nu_);
      for (std::size_t i = 0; i < dim_; ++i) drift[i] = c * x[i];
      return 1.0 + sq_norm(x, dim_) / nu_;
    }
    case Kind::Custom:
      if (custom_->drift) {
        Eigen::Map<const Vector> xv(x, static_cast<Eigen::Index>(dim_));
        const Vector b = custom_->drift(xv);
        require_same_dim(b.size(), static_cast<std::ptrdiff_t>(dim_), "custom drift");
        std::copy(b.data(), b.data() + dim_, drift);
        return custom_->scale(xv);
      }
      [[fallthrough]];
    default:
      score_into(x, drift);
      for (std::size_t i = 0; i < dim_; ++i) drift[i] *= 0.5;
      return 1.0;
  }
}

Vector Target::score(const VectorRef& x) const {
  check_dim(x, "score");
  Vector out(x.size());
  score_into(x.data(), out.data());
  return out;
}

Diffusion Target::diffusion(const VectorRef& x) const {
  check_dim(x, "diffusion");
  Diffusion d;
  d.drift.resize(x.size());
  d.scale = diffusion_into(x.data(), d.drift.data());
  return d;
}

double Target::log_density_unnormalized(const VectorRef& x) const {
  check_dim(x, "log density");
  switch (kind_) {
    case Kind::Gaussian: return -0.5 * sq_dist(x.data(), mean1_) / variance_;
    case Kind::GaussianMixture2: {
      double l1, l2;
      mixture_logits(x.data(), mean1_, mean2_, pi_, l1, l2);
      return log_sum_exp(l1, l2);
    }
    case Kind::StudentT:
      return -0.5 * (nu_ + static_cast<double>(dim_)) * std::log1p(x.squaredNorm() / nu_);
    case Kind::Custom:
      if (!custom_->log_density) throw InputError("custom target has no log density");
      return custom_->log_density(x);
  }
  return 0.0;
}

double Target::mixture_posterior(const VectorRef& x) const {
  if (kind_ != Kind::GaussianMixture2) throw InputError("mixture_posterior needs a mixture target");
  check_dim(x, "mixture posterior");
  double l1, l2;
  mixture_logits(x.data(), mean1_, mean2_, pi_, l1, l2);
  if (l1 == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(l1 - log_sum_exp(l1, l2));
}

std::optional<WeightFunction> Target::diffusion_weight() const {
  switch (kind_) {
    case Kind::StudentT: return WeightFunction{std::sqrt(nu_), 1.0, 1.0 / nu_};
    case Kind::Custom:
      if (custom_->drift) return std::nullopt;
      return WeightFunction{};
    default: return WeightFunction{};
  }
}

std::optional<double> Target::dissipativity_alpha() const {
  if (kind_ == Kind::StudentT) return 1.0 - 2.0 / nu_;
  return std::nullopt;
}

std::optional<double> Target::coefficient_growth_constant() const {
  // |a(x)| <= (lambda_a / 4)(1 + |x|^2) with a = 1 + |x|^2 / nu and nu > 2.
  if (kind_ == Kind::StudentT) return 4.0;
  return std::nullopt;
}

nlohmann::json Target::to_json() const {
  switch (kind_) {
    case Kind::Gaussian:
      return {{"kind", "gaussian"}, {"mean", vector_to_json(mean1_)}, {"variance", variance_}};
    case Kind::GaussianMixture2:
      return {{"kind", "mixture2"},
              {"mean1", vector_to_json(mean1_)},
              {"mean2", vector_to_json(mean2_)},
              {"pi", pi_}};
    case Kind::StudentT: return {{"kind", "student_t"}, {"nu", nu_}, {"dim", dim_}};
    case Kind::Custom: throw InputError("custom targets cannot be serialized");
  }
  return {};
}

Target Target::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InputError("target must be a JSON object with a string 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    const double variance = j.contains("variance") ? number_field(j, "variance") : 1.0;
    return gaussian(vector_from_json(j, "mean"), variance);
  }
  if (kind == "mixture2") {
    const double pi = j.contains("pi") ? number_field(j, "pi") : 0.5;
    return mixture2(vector_from_json(j, "mean1"), vector_from_json(j, "mean2"), pi);
  }
  if (kind == "student_t") {
    const double dim = number_field(j, "dim");
    if (dim < 1 || dim != std::floor(dim)) throw InputError("student_t 'dim' must be a positive integer");
    return student_t(number_field(j, "nu"), static_cast<std::size_t>(dim));
  }
  throw InputError("unknown target kind '" + kind + "'");
}

}  // namespace steinkd
