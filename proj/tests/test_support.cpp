#include "steinkd/io.hpp"
#include "steinkd/parallel.hpp"
#include "steinkd/random.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

using namespace steinkd;

TEST_CASE("format_double uses 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("pairwise_sum") {
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v.data(), v.size()) == 500500.0);
  std::vector<double> tenths(1 << 20, 0.1);
  CHECK(std::abs(pairwise_sum(tenths.data(), tenths.size()) - 0.1 * (1 << 20)) < 1e-8);
}

TEST_CASE("parallel_for visits every index once and propagates exceptions") {
  for (std::size_t threads : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, threads);
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 7) throw NumericError("x"); }, 4),
                  NumericError);
  // Nested regions run serially rather than oversubscribing.
  std::atomic<int> total{0};
  parallel_for(4, [&](std::size_t) { parallel_for(5, [&](std::size_t) { total++; }, 4); }, 4);
  CHECK(total.load() == 20);
}

TEST_CASE("thread count setting") {
  set_thread_count(3);
  CHECK(thread_count() == 3);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}

TEST_CASE("counter RNG is reproducible") {
  CounterRng a(5), b(5), c(6);
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CHECK(hash_seed({1, 2}) != hash_seed({2, 1}));
  CHECK(hash_seed({1, 2}) == hash_seed({1, 2}));
}

TEST_CASE("RNG distributions have the right moments") {
  CounterRng rng(123);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sg = 0, sc = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_FALSE((u <= 0.0 || u >= 1.0));
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sg += rng.gamma(0.7);
    sc += rng.chi_squared(4.0);
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sg / n == doctest::Approx(0.7).epsilon(0.02));
  CHECK(sc / n == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("sample CSV without weights") {
  std::istringstream in("1,2\n3,4\n5,6\n7,8\n");
  const auto q = read_sample_csv(in, 2);
  CHECK(q.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(q.weights()[i] == 0.25);
  CHECK(q.points()(3, 1) == 8.0);
}

TEST_CASE("sample CSV with weights") {
  std::istringstream plain("# comment\n0.5,0.2\n\n1.5,0.8\n");
  const auto q = read_sample_csv(plain, 1);
  CHECK(q.weights()[0] == doctest::Approx(0.2));

  std::istringstream header("x0,x1,weight\n0,0,0.3\n1,1,0.695\n");
  const auto h = read_sample_csv(header, 2);
  CHECK(h.weights().sum() == doctest::Approx(1.0));
  CHECK(h.weights()[0] == doctest::Approx(0.3 / 0.995));

  std::istringstream named("x0,x1\n0,0\n1,1\n");
  CHECK(read_sample_csv(named, 2).weights()[1] == 0.5);
}

TEST_CASE("sample CSV rejections") {
  auto parse = [](const char* text, std::size_t dim) {
    std::istringstream in(text);
    return read_sample_csv(in, dim);
  };
  CHECK_THROWS_AS(parse("", 2), InputError);
  CHECK_THROWS_AS(parse("x,y\n", 2), InputError);
  CHECK_THROWS_AS(parse("1,2,3,4\n", 2), InputError);
  CHECK_THROWS_AS(parse("1,2\n3\n", 2), InputError);
  CHECK_THROWS_AS(parse("1,abc\n", 2), InputError);
  CHECK_THROWS_AS(parse("1,0.5\n2,0.4\n", 1), InputError);
  CHECK_THROWS_AS(parse("1,1.2\n2,-0.2\n", 1), InputError);
  CHECK_THROWS_AS(parse("1,nan\n", 2), InputError);
  CHECK_THROWS_AS(parse("a,b,c\n1,2,3\n", 2), InputError);
  CHECK_THROWS_AS(read_sample_csv_file("/nonexistent/sample.csv", 1), InputError);
  CHECK_THROWS_AS(read_json_file("/nonexistent/config.json"), InputError);
}
