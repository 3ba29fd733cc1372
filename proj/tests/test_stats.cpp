#include <cmath>
#include <random>

#include "doctest.h"
#include "perbbm/config.hpp"
#include "perbbm/stats.hpp"

using namespace perbbm;

namespace {

// Density proportional to y exp(-c y) on y > 1: Gamma(2, 1/c) conditioned on y > 1.
std::vector<double> gamma_tail(std::size_t n, double c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(2.0, 1.0 / c);
  std::vector<double> out;
  while (out.size() < n) {
    const double y = g(rng);
    if (y > 1.0) out.push_back(y);
  }
  return out;
}

}  // namespace

TEST_CASE("tail fit recovers the rate of a y exp(-c y) tail") {
  const double c = std::sqrt(2.0);
  const auto x = gamma_tail(200000, c, 1);
  const auto fit = tail_fit(x, 2.0, 7.0, TailModel::y_times_exponential);
  // P(Y > y) = (1 + c y) e^{-c y} / const: the y-model slope is c up to a 1/(c y) correction.
  CHECK(fit.lambda_hat == doctest::Approx(c).epsilon(0.1));
  CHECK(fit.r2 > 0.99);
  for (std::size_t h : fit.hits) CHECK(h >= kMinBinHits);
}

TEST_CASE("pure exponential tail") {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> e(2.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = e(rng);
  const auto fit = tail_fit(x, 0.5, 4.0, TailModel::pure_exponential);
  CHECK(fit.lambda_hat == doctest::Approx(2.0).epsilon(0.03));
  CHECK(fit.y_grid.back() <= 4.0);
}

TEST_CASE("tail fit errors") {
  std::vector<double> few(100, 1.0);
  CHECK_THROWS_AS(tail_fit(few, 0.0, 1.0, TailModel::pure_exponential), StatsError);
  std::vector<double> light(20000, 0.0);
  CHECK_THROWS_AS(tail_fit(light, 2.0, 7.0, TailModel::y_times_exponential), StatsError);
  std::vector<double> ok(20000, 3.0);
  CHECK_THROWS_AS(tail_fit(ok, 0.0, 7.0, TailModel::y_times_exponential), StatsError);
}

TEST_CASE("fixed-phase subsequence") {
  const auto fp = find_front_params(parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j"));
  for (double p : {0.0, 0.3, 0.9}) {
    const auto spec = subsequence_times(fp, p, 2.0, 30);
    REQUIRE(spec.times.size() == 30);
    for (std::size_t i = 0; i < spec.times.size(); ++i) {
      REQUIRE(fractional_distance(front_position(fp, spec.times[i]), p) < 1e-9);
      if (i > 0) {
        REQUIRE(spec.times[i] > spec.times[i - 1]);
        REQUIRE(front_position(fp, spec.times[i]) - front_position(fp, spec.times[i - 1]) ==
                doctest::Approx(1.0).epsilon(1e-9));
      }
    }
    CHECK(spec.times.front() >= 2.0);
    CHECK(spec.times[1] - spec.times[0] == doctest::Approx(1.0 / fp.speed()).epsilon(0.2));
  }
  CHECK_THROWS_AS(subsequence_times(fp, 1.0, 2.0, 3), StatsError);
  CHECK_THROWS_AS(subsequence_times(fp, 0.0, 1.0, 3), StatsError);
  CHECK(fractional_distance(0.95, 2.05) == doctest::Approx(0.1));
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(a, std::vector<double>{10, 11}) == 1.0);
  CHECK(ks_distance(a, std::vector<double>{2.5}) == doctest::Approx(0.5));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> x(10000), y(10000);
  for (auto& v : x) v = n(rng);
  for (auto& v : y) v = n(rng);
  const double d = ks_distance(x, y);
  CHECK(d < 0.03);
  CHECK(d == ks_distance(y, x));
  CHECK(ks_pvalue(d, x.size(), y.size()) > 0.001);
  CHECK(ks_pvalue(0.1, 10000, 10000) < 1e-10);
  CHECK_THROWS_AS(ks_distance(a, std::vector<double>{}), StatsError);
}

TEST_CASE("nu estimate from given samples") {
  FrontParams fp;
  fp.attained = true;
  fp.lambda_star = std::sqrt(2.0);
  fp.v_star = std::sqrt(2.0);
  fp.log_coeff = 3.0 / (2.0 * std::sqrt(2.0));
  std::vector<double> c(1000, 0.0);
  for (int i = 0; i < 100; ++i) c[i] = 5.0;
  const auto pt = nu_from_samples(c, fp, 1.0, 10.0, 3.0);
  CHECK(pt.hits == 100);
  CHECK(pt.nu_hat == doctest::Approx(0.1 / (3.0 * std::exp(-3.0 * std::sqrt(2.0)))));
  CHECK(pt.phase >= 0.0);
  CHECK(pt.phase < 1.0);
}
