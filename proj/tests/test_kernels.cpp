#include "steinkd/kernel_check.hpp"
#include "steinkd/kernels.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace steinkd;
using steinkd::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

KernelSpec shipped_composite() {
  return KernelSpec::sum(KernelSpec::tilted({1.0, 0.25, 1.0}, KernelSpec::imq()),
                         KernelSpec::normalized_linear());
}

}  // namespace

TEST_CASE("spot values against the mpmath oracle") {
  // Frozen from tests/oracles/derive_values.py.
  CHECK(KernelSpec::imq().eval(vec({0}), vec({1})) == doctest::Approx(0.7071067811865476).epsilon(1e-15));
  CHECK(KernelSpec::imq().grad_x(vec({1}), vec({0}))[0] ==
        doctest::Approx(-0.3535533905932737622).epsilon(1e-14));
  CHECK(KernelSpec::matern32().grad_y(vec({0}), vec({0.5}))[0] ==
        doctest::Approx(-0.6309300390811721847).epsilon(1e-14));
  CHECK(KernelSpec::matern32().cross_trace(vec({0.3, -1}), vec({0.3, -1})) ==
        doctest::Approx(6.0).epsilon(1e-14));
  CHECK(KernelSpec::imq().cross_trace(vec({0.2}), vec({0.2})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(KernelSpec::eq().cross_trace(vec({1, 2, 3}), vec({1, 2, 3})) ==
        doctest::Approx(3.0).epsilon(1e-14));
  CHECK(KernelSpec::normalized_linear().grad_x(vec({0}), vec({0}))[0] == 0.0);
}

TEST_CASE("identity cases") {
  const Vector x = vec({0.3, -2.0, 5.0});
  CHECK(KernelSpec::imq().eval(x, x) == 1.0);
  CHECK(KernelSpec::eq(0.7).eval(x, x) == 1.0);
  CHECK(KernelSpec::matern32(2.0).eval(x, x) == 1.0);
  CHECK(KernelSpec::normalized_linear().eval(vec({0}), vec({0})) == 1.0);
  CHECK(KernelSpec::tilted({1.0, 0.25, 1.0}, KernelSpec::imq()).eval(vec({0}), vec({0})) == 1.0);
  CHECK(KernelSpec::eq().grad_x(x, x).norm() == 0.0);
  CHECK(KernelSpec::eq(2.0).grad_y(x, x).norm() == 0.0);
  CHECK(KernelSpec::eq(2.0).cross_trace(x, x) == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("translation invariance of radial nodes") {
  CounterRng rng(11);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 3), y = random_vector(rng, 3), s = random_vector(rng, 3);
    for (const auto& k : {KernelSpec::imq(1.3, 0.8, -0.3), KernelSpec::eq(0.9), KernelSpec::matern32(1.7)}) {
      CHECK(k.eval(x + s, y + s) == doctest::Approx(k.eval(x, y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetry is exact and grad_y mirrors grad_x") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const KernelSpec k = random_kernel_spec(seed);
    CounterRng rng(seed * 7);
    for (int t = 0; t < 20; ++t) {
      const Vector x = random_vector(rng, 4), y = random_vector(rng, 4);
      CHECK(k.eval(x, y) == k.eval(y, x));
      const Vector gy = k.grad_y(x, y), gx = k.grad_x(y, x);
      CHECK((gy - gx).lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + gx.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("tilting identity holds exactly") {
  const WeightFunction w{1.5, 0.3, 1.0};
  const KernelSpec base = KernelSpec::matern32(1.2);
  const KernelSpec tilted = KernelSpec::tilted(w, base);
  CounterRng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 2), y = random_vector(rng, 2);
    CHECK(tilted.eval(x, y) == doctest::Approx(w(x) * w(y) * base.eval(x, y)).epsilon(1e-15));
  }
}

TEST_CASE("sum identity holds for all four primitives") {
  const KernelSpec a = KernelSpec::imq(0.8), b = KernelSpec::tilted({1.0, 0.4, 1.0}, KernelSpec::normalized_linear());
  const KernelSpec s = KernelSpec::sum(a, b);
  CounterRng rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 3), y = random_vector(rng, 3);
    CHECK(s.eval(x, y) == a.eval(x, y) + b.eval(x, y));
    CHECK(s.grad_x(x, y) == a.grad_x(x, y) + b.grad_x(x, y));
    CHECK(s.grad_y(x, y) == a.grad_y(x, y) + b.grad_y(x, y));
    CHECK(s.cross_trace(x, y) == a.cross_trace(x, y) + b.cross_trace(x, y));
  }
}

TEST_CASE("derivatives agree with finite differences for every node kind") {
  const KernelSpec kinds[] = {
      KernelSpec::imq(), KernelSpec::imq(0.7, 1.5, -0.8), KernelSpec::eq(), KernelSpec::matern32(),
      KernelSpec::normalized_linear(), KernelSpec::normalized_linear(2.0),
      KernelSpec::tilted({1.0, 0.55, 1.0}, KernelSpec::imq()),
      KernelSpec::tilted({2.0, 1.0, 0.25}, KernelSpec::eq()), shipped_composite()};
  for (const auto& k : kinds) {
    const auto report = check_kernel(kernel_functions(k));
    INFO(k.to_json().dump());
    CHECK(report.passed());
    CHECK(report.max_err_grad_x < 1e-5);
    CHECK(report.max_err_cross_trace < 1e-5);
    CHECK(report.pairs_checked == 300);
  }
}

TEST_CASE("random composites pass the derivative and PSD checks") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const KernelSpec k = random_kernel_spec(seed);
    INFO(k.to_json().dump());
    CHECK(check_kernel(kernel_functions(k)).passed());
  }
}

TEST_CASE("checker flags a broken derivative") {
  KernelFunctions broken = kernel_functions(KernelSpec::imq());
  broken.grad_x = [](const VectorRef& x, const VectorRef& y) {
    return Vector(KernelSpec::imq().grad_x(x, y) * 1.001);
  };
  const auto report = check_kernel(broken);
  CHECK_FALSE(report.passed());
  CHECK(report.max_err_grad_x > 1e-4);
  CHECK(report.max_err_grad_y < 1e-5);
}

TEST_CASE("checker flags an indefinite kernel") {
  KernelFunctions bad = kernel_functions(KernelSpec::imq());
  bad.eval = [](const VectorRef& x, const VectorRef& y) { return -KernelSpec::imq().eval(x, y); };
  CHECK_FALSE(check_kernel(bad).passed());
}

TEST_CASE("Matern cross trace is regular at coincident points") {
  const KernelSpec k = KernelSpec::matern32(1.0);
  const Vector x = vec({0.1, 0.2});
  Vector y = x;
  y[0] += 1e-13;
  CHECK(std::isfinite(k.cross_trace(x, y)));
  CHECK(k.cross_trace(x, y) == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("weight functions") {
  const WeightFunction w{1.0, 0.25, 1.0};
  CHECK(w(vec({0})) == 1.0);
  CHECK(WeightFunction::linear_growth(1.0, 0.1).exponent == doctest::Approx(0.05));
  CHECK(WeightFunction::quadratic_growth(1.0, 0.1).exponent == doctest::Approx(0.55));
  CHECK(WeightFunction::linear_growth(1.0, 0.0).exponent == 0.0);
  const Vector x = vec({0.4, -1.2});
  const Vector g = WeightFunction{1.5, 0.7, 1.0}.gradient(x);
  const double expected = 2 * 0.7 * std::pow(1.5 * 1.5 + x.squaredNorm(), 0.7 - 1.0);
  CHECK(g[0] == doctest::Approx(expected * 0.4));
  CHECK_THROWS_AS((WeightFunction{0.5, 0.2, 1.0}.validate()), InputError);
  CHECK_THROWS_AS((WeightFunction{1.0, -0.1, 1.0}.validate()), InputError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(KernelSpec::imq(0.0), InputError);
  CHECK_THROWS_AS(KernelSpec::imq(1.0, 1.0, -1.0), InputError);
  CHECK_THROWS_AS(KernelSpec::imq(1.0, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(KernelSpec::imq(1.0, -1.0), InputError);
  CHECK_THROWS_AS(KernelSpec::eq(-1.0), InputError);
  CHECK_THROWS_AS(KernelSpec::imq().eval(vec({0, 1}), vec({0})), InputError);
}

TEST_CASE("JSON round trip is lossless") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const KernelSpec k = random_kernel_spec(seed);
    const KernelSpec back = KernelSpec::from_json(nlohmann::json::parse(k.to_json().dump()));
    CHECK(back.to_json() == k.to_json());
    const Vector x = vec({0.3, -0.7}), y = vec({1.1, 0.2});
    CHECK(back.eval(x, y) == k.eval(x, y));
  }
}

TEST_CASE("JSON accepts the growth parametrization") {
  const auto j = nlohmann::json::parse(
      R"({"kind":"tilted","q":1,"theta":0.1,"growth":"quadratic","child":{"kind":"eq"}})");
  CHECK(KernelSpec::from_json(j).weight().exponent == doctest::Approx(0.55));
  CHECK_THROWS_AS(KernelSpec::from_json(nlohmann::json::parse(R"({"kind":"bogus"})")), InputError);
  CHECK_THROWS_AS(KernelSpec::from_json(nlohmann::json::parse(R"({"kind":"tilted"})")), InputError);
}

TEST_CASE("with_bandwidth replaces every radial node") {
  const KernelSpec k = KernelSpec::sum(KernelSpec::imq(1.0), KernelSpec::tilted({1, 0.2, 1}, KernelSpec::matern32(2.0)));
  const KernelSpec k2 = k.with_bandwidth(0.3);
  CHECK(k2.left().radial_params().bandwidth == 0.3);
  CHECK(k2.right().child().radial_params().bandwidth == 0.3);
  CHECK(k.first_bandwidth().value() == 1.0);
  CHECK_FALSE(KernelSpec::normalized_linear().first_bandwidth().has_value());
}
