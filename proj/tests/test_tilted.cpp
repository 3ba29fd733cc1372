#include <cmath>
#include <numeric>

#include "doctest.h"
#include "perbbm/config.hpp"
#include "perbbm/tilted.hpp"

using namespace perbbm;

namespace {

struct Flat {
  EnvironmentSpec env = parse_env(R"({"g": "1"})");
  FrontParams fp = find_front_params(env);
  TiltDrift drift = tilt_drift(solve_eigenpair(env, fp.lambda()), env);
};

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("constant drift endpoints are Gaussian with the right moments") {
  const Flat f;
  const auto y = tilted_endpoints(f.drift, 0.0, 1.0, 1e-2, 20000, 5);
  const double lam = std::sqrt(2.0);
  CHECK(std::abs(mean(y) - lam) < 4.0 * std::sqrt(1.0 / 20000));
  CHECK(variance(y) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("path shape and determinism") {
  const Flat f;
  const auto p0 = simulate_tilted(f.drift, 0.3, 0.0, 1e-3, 1);
  CHECK(p0.values.size() == 1);
  CHECK(p0.values[0] == 0.3);
  const auto a = simulate_tilted(f.drift, 0.0, 2.0, 1e-3, 9);
  const auto b = simulate_tilted(f.drift, 0.0, 2.0, 1e-3, 9);
  CHECK(a.values.size() == 2001);
  CHECK(a.values == b.values);
  CHECK(a.horizon() == doctest::Approx(2.0));
  CHECK_THROWS(simulate_tilted(f.drift, 0.0, 1.0, 0.1, 1));
}

TEST_CASE("renewal times of an injected linear path") {
  TiltedPath p;
  p.dt = 1e-3;
  for (int i = 0; i <= 4000; ++i) p.values.push_back(2.0 * i * p.dt);
  const auto r = renewal_times(p, 6, 2.0);
  REQUIRE(r.T.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(r.T[k] == doctest::Approx((k + 1) / 2.0).epsilon(1e-12));
    CHECK(std::abs(r.S[k]) < 1e-12);
  }
  CHECK_THROWS(renewal_times(p, 9, 2.0));
}

TEST_CASE("mean first passage to level one is 1/v* for a constant rate") {
  const Flat f;
  const auto t = first_passage_times(f.drift, 0.0, 1.0, 1e-3, 20000, 17);
  const double se = std::sqrt(variance(t) / t.size());
  CHECK(std::abs(mean(t) - 1.0 / std::sqrt(2.0)) < 4.0 * se);
  // Inverse Gaussian variance 1 / v^3.
  CHECK(variance(t) == doctest::Approx(std::pow(2.0, -1.5)).epsilon(0.06));
}

TEST_CASE("barrier estimator edge cases") {
  const Flat f;
  const auto pool = RenewalIncrementPool::sample(f.drift, f.fp.speed(), 2000, 3);
  CHECK(pool.increments.size() == 2000);
  CHECK(pool.mean() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));

  // A window covering everything with a high start: certain.
  const auto sure = estimate_barrier(pool, {4, 50.0, 0.0, 1000.0, 0.0}, 10000, 4);
  CHECK(sure.hits == 10000);
  CHECK(sure.p_hat == 1.0);

  // A window far above any reachable endpoint: empty.
  const auto none = estimate_barrier(pool, {4, 1.0, 500.0, 1.0, 0.0}, 10000, 4);
  CHECK(none.hits == 0);
  CHECK(none.upper_bound == doctest::Approx(1.0 - std::pow(0.05, 1.0 / 10000)));

  CHECK_THROWS(estimate_barrier(pool, {4, 1.0, 0.0, 1.0, 0.0}, 100, 4));
  CHECK_THROWS(estimate_barrier(pool, {0, 1.0, 0.0, 1.0, 0.0}, 10000, 4));
}

TEST_CASE("resampled and direct barrier estimates agree") {
  const Flat f;
  const auto pool = RenewalIncrementPool::sample(f.drift, f.fp.speed(), 20000, 21);
  const BarrierQuery q{3, 1.0, 0.0, 1.0, 0.0};
  const auto a = estimate_barrier(pool, q, 20000, 22);
  const auto b = estimate_barrier_direct(f.drift, f.fp.speed(), q, 10000, 23);
  CHECK(std::abs(a.p_hat - b.p_hat) < 4.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("binomial estimate") {
  const auto e = binomial_estimate(25, 100);
  CHECK(e.p_hat == 0.25);
  CHECK(e.std_error == doctest::Approx(std::sqrt(0.25 * 0.75 / 100)));
  CHECK(e.upper_bound > 0.25);
}

TEST_CASE("log-log slope of an exact power law") {
  const std::vector<double> n{16, 32, 64, 128, 256};
  std::vector<double> p;
  for (double x : n) p.push_back(3.0 * std::pow(x, -1.5));
  CHECK(log_log_slope(n, p) == doctest::Approx(-1.5).epsilon(1e-12));
  p[0] = 0.0;
  CHECK_THROWS(log_log_slope(n, p));
}

TEST_CASE("continuous barrier argument checks") {
  const Flat f;
  CHECK_THROWS(continuous_barrier(f.drift, f.fp, 10.0, 0.5, 0.0, 100, 1));
  CHECK_THROWS(continuous_barrier(f.drift, f.fp, 2.0, 2.0, 0.0, 100, 1));
}
