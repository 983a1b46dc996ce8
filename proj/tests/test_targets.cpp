#include "steinkd/targets.hpp"

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

Target symmetric_mixture(std::size_t dim, double m) {
  return Target::mixture2(Vector::Constant(dim, -m), Vector::Constant(dim, m), 0.5);
}

}  // namespace

TEST_CASE("score examples") {
  CHECK(Target::gaussian(Vector::Zero(3)).score(Vector::Zero(3)).norm() == 0.0);
  CHECK(Target::student_t(4.0, 5).score(Vector::Zero(5)).norm() == 0.0);
  CHECK(symmetric_mixture(2, 1.5).score(Vector::Zero(2)).norm() == doctest::Approx(0.0));
  // mpmath oracle: d/dx log t_4(x) at x = 1.
  CHECK(Target::student_t(4.0, 1).score(vec({1.0}))[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(Target::gaussian(vec({1.0, 2.0}), 4.0).score(vec({3.0, 2.0}))[0] == doctest::Approx(-0.5));
}

TEST_CASE("log density convention drops constants") {
  CHECK(Target::gaussian(Vector::Zero(2)).log_density_unnormalized(Vector::Zero(2)) == 0.0);
  CHECK(Target::student_t(4.0, 3).log_density_unnormalized(Vector::Zero(3)) == 0.0);
  CHECK(Target::gaussian(Vector::Zero(1)).log_density_unnormalized(vec({2.0})) == doctest::Approx(-2.0));
}

TEST_CASE("score matches finite differences of the log density") {
  const Target targets[] = {
      Target::gaussian(vec({0.5, -1.0, 2.0}), 1.7),
      Target::mixture2(vec({-1.0, 0.0, 1.0}), vec({2.0, 1.0, -1.0}), 0.3),
      Target::student_t(4.0, 3),
      Target::student_t(7.5, 3),
  };
  CounterRng rng(21);
  for (const auto& t : targets) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vector x = random_vector(rng, 3, 2.0);
      const Vector s = t.score(x);
      Vector fd(3);
      const double h = 1e-5;
      for (Eigen::Index i = 0; i < 3; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        fd[i] = (t.log_density_unnormalized(xp) - t.log_density_unnormalized(xm)) / (2 * h);
      }
      CHECK((s - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * std::max(1.0, s.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("Student-t dissipativity identity") {
  const double nu = 4.0;
  const std::size_t D = 5;
  const Target t = Target::student_t(nu, D);
  const Diffusion at_zero = t.diffusion(Vector::Zero(5));
  CHECK(at_zero.drift.norm() == 0.0);
  CHECK(at_zero.scale == 1.0);
  CounterRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = random_vector(rng, D, 10.0);
    const Diffusion d = t.diffusion(x);
    const double lhs = 2.0 * d.drift.dot(x) + static_cast<double>(D) * d.scale;
    const double rhs = -(1.0 - 2.0 / nu) * x.squaredNorm() + static_cast<double>(D);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    // 2b = a grad log p + grad a
    const Vector two_b = d.scale * t.score(x) + 2.0 * x / nu;
    CHECK((2.0 * d.drift - two_b).norm() <= 1e-12 * (1.0 + two_b.norm()));
  }
  CHECK(t.dissipativity_alpha().value() == doctest::Approx(0.5));
  CHECK(t.coefficient_growth_constant().value() == 4.0);
  CHECK(t.growth_exponent() == 1);
}

TEST_CASE("Gaussian diffusion is Langevin") {
  const Target g = Target::gaussian(Vector::Zero(2));
  const Vector x = vec({0.4, -3.0});
  const Diffusion d = g.diffusion(x);
  CHECK((d.drift + x / 2).norm() == doctest::Approx(0.0));
  CHECK(d.scale == 1.0);
  CHECK(g.growth_exponent() == 0);
  CHECK_FALSE(g.dissipativity_alpha().has_value());
}

TEST_CASE("mixture posterior") {
  const Target m0 = Target::mixture2(vec({-1.0}), vec({1.0}), 0.0);
  CHECK(m0.mixture_posterior(vec({-1.0})) == 0.0);
  CHECK(symmetric_mixture(3, 2.0).mixture_posterior(Vector::Zero(3)) == doctest::Approx(0.5));
  const Target far = Target::mixture2(Vector::Constant(5, -30.0), Vector::Constant(5, -10.0), 0.1);
  // mpmath oracle: 1 - posterior at mean1 is below 1e-40.
  CHECK(far.mixture_posterior(Vector::Constant(5, -30.0)) >= 1.0 - 1e-12);
}

TEST_CASE("mixture posterior stays in [0, 1] far from the modes") {
  const Target m = Target::mixture2(Vector::Constant(5, -30.0), Vector::Constant(5, -10.0), 0.3);
  CounterRng rng(8);
  for (double scale : {1.0, 1e2, 1e4, 1e6}) {
    for (int t = 0; t < 50; ++t) {
      const Vector x = random_vector(rng, 5, scale);
      const double p = m.mixture_posterior(x);
      CHECK(std::isfinite(p));
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(m.score(x).allFinite());
    }
  }
}

TEST_CASE("mixture score interpolates the component scores") {
  const Vector mu1 = vec({-2.0, 1.0}), mu2 = vec({3.0, 0.5});
  const Target m = Target::mixture2(mu1, mu2, 0.35);
  CounterRng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_vector(rng, 2, 3.0);
    const double p = m.mixture_posterior(x);
    const Vector expected = p * (mu1 - x) + (1.0 - p) * (mu2 - x);
    CHECK((m.score(x) - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
  }
}

TEST_CASE("diffusion weight reproduces a(x)") {
  const Target t = Target::student_t(4.0, 3);
  const WeightFunction w = t.diffusion_weight().value();
  const Vector x = vec({1.0, -2.0, 0.5});
  CHECK(w(x) == doctest::Approx(t.diffusion(x).scale).epsilon(1e-14));
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(Target::student_t(2.0, 3), InputError);
  CHECK_THROWS_AS(Target::gaussian(Vector::Zero(2), 0.0), InputError);
  CHECK_THROWS_AS(Target::mixture2(Vector::Zero(2), Vector::Zero(3), 0.5), InputError);
  CHECK_THROWS_AS(Target::mixture2(Vector::Zero(2), Vector::Zero(2), 1.5), InputError);
  CHECK_THROWS_AS(Target::gaussian(Vector::Zero(2)).score(Vector::Zero(3)), InputError);
}

TEST_CASE("custom targets default to the Langevin diffusion") {
  Target::CustomFunctions f;
  f.dim = 2;
  f.score = [](const VectorRef& x) { return Vector(-x); };
  f.log_density = [](const VectorRef& x) { return -0.5 * x.squaredNorm(); };
  const Target t = Target::custom(f);
  const Vector x = vec({1.0, 2.0});
  CHECK((t.diffusion(x).drift + x / 2).norm() == 0.0);
  CHECK(t.diffusion(x).scale == 1.0);
}

TEST_CASE("JSON round trip") {
  const Target targets[] = {Target::gaussian(vec({0.1, -0.2}), 2.0),
                            Target::mixture2(vec({-1.0, 0.0}), vec({1.0, 3.0}), 0.25),
                            Target::student_t(4.0, 2)};
  for (const auto& t : targets) {
    const Target back = Target::from_json(nlohmann::json::parse(t.to_json().dump()));
    CHECK(back.to_json() == t.to_json());
    CHECK(back.score(vec({0.3, 0.4})) == t.score(vec({0.3, 0.4})));
  }
  CHECK_THROWS_AS(Target::from_json(nlohmann::json::parse(R"({"kind":"cauchy"})")), InputError);
}
