#include "steinkd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

namespace steinkd {

namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InputError(std::string(what) + " must be a positive finite number");
  }
}

}  // namespace

void RadialKernel::validate() const {
  require_positive(bandwidth, "bandwidth");
  if (family == RadialFamily::IMQ) {
    require_positive(imq_offset, "imq offset");
    if (!(imq_exponent > -1.0 && imq_exponent < 0.0)) {
      throw InputError("imq exponent must lie in (-1, 0)");
    }
  }
}

WeightFunction WeightFunction::linear_growth(double q, double theta, double v) {
  WeightFunction w{v, 0.5 * (q + theta - 1.0), 1.0};
  w.validate();
  return w;
}

WeightFunction WeightFunction::quadratic_growth(double q, double theta, double v) {
  WeightFunction w{v, 0.5 * (q + theta), 1.0};
  w.validate();
  return w;
}

void WeightFunction::validate() const {
  if (!(v >= 1.0) || !std::isfinite(v)) throw InputError("weight offset v must be a finite number >= 1");
  require_positive(scale, "weight scale");
  if (!(exponent >= 0.0) || !std::isfinite(exponent)) {
    throw InputError("weight exponent must be a finite number >= 0");
  }
}

void WeightFunction::value_and_radial_coefficient(double sq_norm, double& value,
                                                  double& coefficient) const {
  const double base = v * v + sq_norm;
  if (exponent == 0.0) {
    value = scale;
    coefficient = 0.0;
    return;
  }
  const double powered = std::pow(base, exponent);
  value = scale * powered;
  coefficient = 2.0 * exponent * value / base;
}

double WeightFunction::operator()(const VectorRef& x) const {
  double value, coefficient;
  value_and_radial_coefficient(x.squaredNorm(), value, coefficient);
  return value;
}

Vector WeightFunction::gradient(const VectorRef& x) const {
  double value, coefficient;
  value_and_radial_coefficient(x.squaredNorm(), value, coefficient);
  return coefficient * x;
}

struct KernelSpec::Node {
  struct Tilt {
    WeightFunction weight;
    KernelSpec child;
  };
  struct Pair {
    KernelSpec left;
    KernelSpec right;
  };
  struct Linear {
    double v;
  };
  std::variant<RadialKernel, Linear, Tilt, Pair> data;
};

KernelSpec::KernelSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

KernelSpec KernelSpec::radial(const RadialKernel& params) {
  params.validate();
  return KernelSpec(std::make_shared<const Node>(Node{params}));
}

KernelSpec KernelSpec::imq(double bandwidth, double offset, double exponent) {
  return radial(RadialKernel{RadialFamily::IMQ, bandwidth, offset, exponent});
}

KernelSpec KernelSpec::eq(double bandwidth) {
  return radial(RadialKernel{RadialFamily::EQ, bandwidth});
}

KernelSpec KernelSpec::matern32(double bandwidth) {
  return radial(RadialKernel{RadialFamily::Matern32, bandwidth});
}

KernelSpec KernelSpec::normalized_linear(double v) {
  require_positive(v, "normalized linear v");
  return KernelSpec(std::make_shared<const Node>(Node{Node::Linear{v}}));
}

KernelSpec KernelSpec::tilted(const WeightFunction& weight, const KernelSpec& child) {
  weight.validate();
  return KernelSpec(std::make_shared<const Node>(Node{Node::Tilt{weight, child}}));
}

KernelSpec KernelSpec::sum(const KernelSpec& left, const KernelSpec& right) {
  return KernelSpec(std::make_shared<const Node>(Node{Node::Pair{left, right}}));
}

KernelSpec KernelSpec::tilted_sum(const KernelSpec& base, const WeightFunction& weight,
                                  double linear_v) {
  return tilted(weight, sum(base, normalized_linear(linear_v)));
}

KernelSpec::Kind KernelSpec::kind() const {
  switch (node_->data.index()) {
    case 0: return Kind::Radial;
    case 1: return Kind::NormalizedLinear;
    case 2: return Kind::Tilted;
    default: return Kind::Sum;
  }
}

const RadialKernel& KernelSpec::radial_params() const {
  return std::get<RadialKernel>(node_->data);
}
double KernelSpec::linear_v() const { return std::get<Node::Linear>(node_->data).v; }
const WeightFunction& KernelSpec::weight() const {
  return std::get<Node::Tilt>(node_->data).weight;
}
const KernelSpec& KernelSpec::child() const { return std::get<Node::Tilt>(node_->data).child; }
const KernelSpec& KernelSpec::left() const { return std::get<Node::Pair>(node_->data).left; }
const KernelSpec& KernelSpec::right() const { return std::get<Node::Pair>(node_->data).right; }

std::size_t KernelSpec::scratch_size(std::size_t dim) const {
  switch (kind()) {
    case Kind::Tilted: return child().scratch_size(dim);
    case Kind::Sum:
      return std::max(left().scratch_size(dim), 2 * dim + right().scratch_size(dim));
    default: return 0;
  }
}

namespace {

void evaluate_radial(const RadialKernel& rk, const double* x, const double* y, std::size_t dim,
                     KernelSpec::RawOutput& out) {
  double u = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = x[i] - y[i];
    u += d * d;
  }
  const double sigma2 = rk.bandwidth * rk.bandwidth;
  // Kernels are written as f(u) with u = |x - y|^2, except Matern which uses r.
  double grad_coeff = 0.0;  // grad_x = grad_coeff * (x - y)
  switch (rk.family) {
    case RadialFamily::IMQ: {
      const double beta = rk.imq_exponent;
      const double base = rk.imq_offset * rk.imq_offset + u / sigma2;
      const double k = std::pow(base, beta);
      const double f1 = beta / sigma2 * k / base;
      const double f2 = (beta - 1.0) / sigma2 * f1 / base;
      out.value = k;
      grad_coeff = 2.0 * f1;
      out.cross_trace = -4.0 * f2 * u - 2.0 * static_cast<double>(dim) * f1;
      break;
    }
    case RadialFamily::EQ: {
      const double k = std::exp(-0.5 * u / sigma2);
      const double f1 = -0.5 * k / sigma2;
      const double f2 = 0.25 * k / (sigma2 * sigma2);
      out.value = k;
      grad_coeff = 2.0 * f1;
      out.cross_trace = -4.0 * f2 * u - 2.0 * static_cast<double>(dim) * f1;
      break;
    }
    case RadialFamily::Matern32: {
      const double a = std::sqrt(3.0) / rk.bandwidth;
      // The (x-y)(x-y)^T / r term only enters the trace as r, so r -> 0 is regular.
      const double r = u < 1e-24 ? 0.0 : std::sqrt(u);
      const double e = std::exp(-a * r);
      out.value = (1.0 + a * r) * e;
      grad_coeff = -a * a * e;
      out.cross_trace = a * a * e * (static_cast<double>(dim) - a * r);
      break;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    const double g = grad_coeff * (x[i] - y[i]);
    out.grad_x[i] = g;
    out.grad_y[i] = -g;
  }
}

void evaluate_linear(double v, const double* x, const double* y, std::size_t dim,
                     KernelSpec::RawOutput& out) {
  const double v2 = v * v;
  const double xx = dot(x, x, dim);
  const double yy = dot(y, y, dim);
  const double xy = dot(x, y, dim);
  const double ax2 = v2 + xx;
  const double ay2 = v2 + yy;
  const double inv = 1.0 / std::sqrt(ax2 * ay2);  // 1 / (Ax Ay)
  const double numer = v2 + xy;
  out.value = numer * inv;
  const double cx = numer * inv / ax2;  // n / (Ax^3 Ay)
  const double cy = numer * inv / ay2;  // n / (Ax Ay^3)
  for (std::size_t i = 0; i < dim; ++i) {
    out.grad_x[i] = y[i] * inv - cx * x[i];
    out.grad_y[i] = x[i] * inv - cy * y[i];
  }
  out.cross_trace = static_cast<double>(dim) * inv - yy * inv / ay2 - xx * inv / ax2 +
                    numer * xy * inv / (ax2 * ay2);
}

}  // namespace

void KernelSpec::evaluate_raw(const double* x, const double* y, std::size_t dim, RawOutput& out,
                              double* scratch) const {
  switch (kind()) {
    case Kind::Radial:
      evaluate_radial(radial_params(), x, y, dim, out);
      return;
    case Kind::NormalizedLinear:
      evaluate_linear(linear_v(), x, y, dim, out);
      return;
    case Kind::Tilted: {
      child().evaluate_raw(x, y, dim, out, scratch);
      const WeightFunction& w = weight();
      double wx, cx, wy, cy;
      w.value_and_radial_coefficient(dot(x, x, dim), wx, cx);
      w.value_and_radial_coefficient(dot(y, y, dim), wy, cy);
      const double k = out.value;
      const double xy = dot(x, y, dim);
      const double x_gy = dot(x, out.grad_y, dim);
      const double y_gx = dot(y, out.grad_x, dim);
      out.cross_trace =
          k * cx * cy * xy + wy * cx * x_gy + wx * cy * y_gx + wx * wy * out.cross_trace;
      for (std::size_t i = 0; i < dim; ++i) {
        out.grad_x[i] = wy * (cx * k * x[i] + wx * out.grad_x[i]);
        out.grad_y[i] = wx * (cy * k * y[i] + wy * out.grad_y[i]);
      }
      out.value = wx * wy * k;
      return;
    }
    case Kind::Sum: {
      left().evaluate_raw(x, y, dim, out, scratch);
      RawOutput other{0.0, scratch, scratch + dim, 0.0};
      right().evaluate_raw(x, y, dim, other, scratch + 2 * dim);
      out.value += other.value;
      out.cross_trace += other.cross_trace;
      for (std::size_t i = 0; i < dim; ++i) {
        out.grad_x[i] += other.grad_x[i];
        out.grad_y[i] += other.grad_y[i];
      }
      return;
    }
  }
}

KernelDerivatives KernelSpec::derivatives(const VectorRef& x, const VectorRef& y) const {
  require_same_dim(x.size(), y.size(), "kernel evaluation");
  if (x.size() == 0) throw InputError("kernel evaluation: dimension must be at least 1");
  const auto dim = static_cast<std::size_t>(x.size());
  KernelDerivatives result;
  result.grad_x.resize(x.size());
  result.grad_y.resize(x.size());
  std::vector<double> scratch(scratch_size(dim));
  RawOutput out{0.0, result.grad_x.data(), result.grad_y.data(), 0.0};
  evaluate_raw(x.data(), y.data(), dim, out, scratch.data());
  result.value = out.value;
  result.cross_trace = out.cross_trace;
  return result;
}

double KernelSpec::eval(const VectorRef& x, const VectorRef& y) const {
  return derivatives(x, y).value;
}

Vector KernelSpec::grad_x(const VectorRef& x, const VectorRef& y) const {
  return derivatives(x, y).grad_x;
}

Vector KernelSpec::grad_y(const VectorRef& x, const VectorRef& y) const {
  return derivatives(x, y).grad_y;
}

double KernelSpec::cross_trace(const VectorRef& x, const VectorRef& y) const {
  return derivatives(x, y).cross_trace;
}

KernelSpec KernelSpec::with_bandwidth(double bandwidth) const {
  switch (kind()) {
    case Kind::Radial: {
      RadialKernel params = radial_params();
      params.bandwidth = bandwidth;
      return radial(params);
    }
    case Kind::NormalizedLinear: return *this;
    case Kind::Tilted: return tilted(weight(), child().with_bandwidth(bandwidth));
    case Kind::Sum: return sum(left().with_bandwidth(bandwidth), right().with_bandwidth(bandwidth));
  }
  return *this;
}

std::optional<double> KernelSpec::first_bandwidth() const {
  switch (kind()) {
    case Kind::Radial: return radial_params().bandwidth;
    case Kind::NormalizedLinear: return std::nullopt;
    case Kind::Tilted: return child().first_bandwidth();
    case Kind::Sum: {
      auto b = left().first_bandwidth();
      return b ? b : right().first_bandwidth();
    }
  }
  return std::nullopt;
}

nlohmann::json KernelSpec::to_json() const {
  using nlohmann::json;
  switch (kind()) {
    case Kind::Radial: {
      const RadialKernel& rk = radial_params();
      switch (rk.family) {
        case RadialFamily::IMQ:
          return json{{"kind", "imq"},
                      {"bandwidth", rk.bandwidth},
                      {"offset", rk.imq_offset},
                      {"exponent", rk.imq_exponent}};
        case RadialFamily::EQ: return json{{"kind", "eq"}, {"bandwidth", rk.bandwidth}};
        case RadialFamily::Matern32:
          return json{{"kind", "matern32"}, {"bandwidth", rk.bandwidth}};
      }
      break;
    }
    case Kind::NormalizedLinear: return json{{"kind", "normlin"}, {"v", linear_v()}};
    case Kind::Tilted: {
      const WeightFunction& w = weight();
      return json{{"kind", "tilted"},
                  {"v", w.v},
                  {"exponent", w.exponent},
                  {"scale", w.scale},
                  {"child", child().to_json()}};
    }
    case Kind::Sum:
      return json{{"kind", "sum"}, {"left", left().to_json()}, {"right", right().to_json()}};
  }
  return json{};
}

namespace {

double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InputError(std::string("kernel field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

const nlohmann::json& required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("kernel object is missing '") + key + "'");
  return j.at(key);
}

}  // namespace

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("kernel must be a JSON object");
  const auto& kind_field = required(j, "kind");
  if (!kind_field.is_string()) throw InputError("kernel 'kind' must be a string");
  const std::string kind = kind_field.get<std::string>();
  if (kind == "imq") {
    return imq(number_or(j, "bandwidth", 1.0), number_or(j, "offset", 1.0),
               number_or(j, "exponent", -0.5));
  }
  if (kind == "eq") return eq(number_or(j, "bandwidth", 1.0));
  if (kind == "matern32") return matern32(number_or(j, "bandwidth", 1.0));
  if (kind == "normlin") return normalized_linear(number_or(j, "v", 1.0));
  if (kind == "tilted") {
    WeightFunction w;
    w.v = number_or(j, "v", 1.0);
    w.scale = number_or(j, "scale", 1.0);
    if (j.contains("exponent")) {
      w.exponent = number_or(j, "exponent", 0.0);
    } else if (j.contains("q")) {
      // Alternative parametrization: growth order q and extra tilt theta.
      const double q = number_or(j, "q", 1.0);
      const double theta = number_or(j, "theta", 0.0);
      const std::string growth = j.value("growth", std::string("linear"));
      if (growth == "linear") {
        w.exponent = WeightFunction::linear_growth(q, theta, w.v).exponent;
      } else if (growth == "quadratic") {
        w.exponent = WeightFunction::quadratic_growth(q, theta, w.v).exponent;
      } else {
        throw InputError("tilted 'growth' must be \"linear\" or \"quadratic\"");
      }
    } else {
      throw InputError("tilted kernel needs 'exponent' or 'q'/'theta'");
    }
    return tilted(w, from_json(required(j, "child")));
  }
  if (kind == "sum") return sum(from_json(required(j, "left")), from_json(required(j, "right")));
  throw InputError("unknown kernel kind '" + kind + "'");
}

}  // namespace steinkd
