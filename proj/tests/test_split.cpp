#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "perbbm/config.hpp"
#include "perbbm/split_sampler.hpp"
#include "perbbm/stats.hpp"

using namespace perbbm;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

const EnvironmentSpec& flat() {
  static const EnvironmentSpec e = parse_env(R"j({"g": "1"})j");
  return e;
}

const EnvironmentSpec& periodic() {
  static const EnvironmentSpec e = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  return e;
}

const MaxLawTable& periodic_law() {
  static const MaxLawTable law(periodic(), 3.0, 1.0 / 16.0);
  return law;
}

SplitSampleOptions split_at(double s) {
  SplitSampleOptions o;
  o.split_time = s;
  return o;
}

}  // namespace

TEST_CASE("argument checks") {
  const auto fp = find_front_params(flat());
  CHECK_THROWS(MaxLawTable(flat(), 0.0));
  CHECK_THROWS(MaxLawTable(flat(), 1.0, 0.3));
  CHECK_THROWS(split_max_samples(flat(), fp, 2.0, 4, 1, split_at(2.0)));
  CHECK_THROWS(split_max_samples(flat(), fp, 2.0, 4, 1, split_at(0.0)));
  CHECK_THROWS(split_max_samples(periodic(), fp, 5.0, 4, 1, periodic_law(), split_at(1.0)));
  CHECK_THROWS(sample_conditional_max(periodic_law(), std::vector<double>{}, 0.5));
  CHECK_THROWS(sample_conditional_max(periodic_law(), std::vector<double>{0.0}, 1.0));
}

TEST_CASE("property: the tabulated law is a distribution function in x and decreasing in y") {
  const auto& law = periodic_law();
  for (double y : {-0.3, 0.0, 0.4, 2.7}) {
    double prev = 0.0;
    for (long q = -160; q <= 256; ++q) {
      const double f = law.cdf(y, q);
      REQUIRE(f >= 0.0);
      REQUIRE(f <= 1.0);
      REQUIRE(f >= prev - 1e-12);
      prev = f;
    }
    CHECK(law.cdf(y, -160) < 1e-6);
    CHECK(law.cdf(y, 256) > 1.0 - 1e-6);
    for (long q : {20L, 60L, 100L}) CHECK(law.cdf(y + 0.3, q) <= law.cdf(y, q) + 1e-12);
  }
}

TEST_CASE("property: shifting start and level by one period leaves the law unchanged") {
  const auto& law = periodic_law();
  for (double y : {-0.3, 0.0, 0.4}) {
    for (long q : {10L, 37L, 70L}) CHECK(law.cdf(y + 1.0, q + 16) == doctest::Approx(law.cdf(y, q)).epsilon(1e-9));
  }
}

TEST_CASE("constant rate: every phase gives the same table") {
  const MaxLawTable law(flat(), 2.0, 1.0 / 8.0);
  for (long p = 0; p < 8; ++p) {
    CHECK(law.cdf(0.3 + p / 8.0, 20 + p) == doctest::Approx(law.cdf(0.3, 20)).epsilon(1e-9));
  }
}

TEST_CASE("inversion hits the requested level") {
  const auto& law = periodic_law();
  const std::vector<double> ys = {0.1, -0.4, 0.9};
  for (double u : {0.01, 0.3, 0.5, 0.97}) {
    const double x = sample_conditional_max(law, ys, u);
    const auto q = static_cast<long>(std::floor(x / law.dx()));
    const auto g = [&](long j) {
      double p = 1.0;
      for (double y : ys) p *= law.cdf(y, j);
      return p;
    };
    const double w = x / law.dx() - static_cast<double>(q);
    CHECK((1.0 - w) * g(q) + w * g(q + 1) == doctest::Approx(u).epsilon(1e-9));
  }
  // More particles push the maximum up.
  CHECK(sample_conditional_max(law, std::vector<double>{0.0, 0.0}, 0.5) >
        sample_conditional_max(law, std::vector<double>{0.0}, 0.5));
}

TEST_CASE("split sampling matches direct simulation of the maximum") {
  // Oracle: unpruned runs to the full horizon.
  for (const auto* env : {&flat(), &periodic()}) {
    const auto fp = find_front_params(*env);
    MaxSampleOptions direct;
    direct.prune.enabled = false;
    const auto a = centered_values(max_samples(*env, fp, 5.0, 10'000, 11, direct));
    const auto b = centered_values(split_max_samples(*env, fp, 5.0, 10'000, 12, split_at(1.0)));
    // 0.03 is about the 0.1% critical value of the two-sample statistic at these sizes.
    CHECK(ks_distance(a, b) < 0.03);
    CHECK(std::abs(mean(a) - mean(b)) < 0.05);
  }
}

TEST_CASE("drift environment: split sampling matches direct simulation") {
  const auto env = parse_env(R"j({"g": "1", "mu": "0.2*sin(2*pi*x)"})j");
  const auto fp = find_front_params(env);
  MaxSampleOptions direct;
  direct.prune.enabled = false;
  const auto a = centered_values(max_samples(env, fp, 4.0, 4000, 21, direct));
  const auto b = centered_values(split_max_samples(env, fp, 4.0, 4000, 22, split_at(1.0)));
  CHECK(ks_distance(a, b) < 0.045);
}

TEST_CASE("coupled split times agree") {
  const auto fp = find_front_params(periodic());
  const auto a = centered_values(split_max_samples(periodic(), fp, 8.0, 2000, 5, split_at(2.0)));
  const auto b = centered_values(split_max_samples(periodic(), fp, 8.0, 2000, 5, split_at(4.0)));
  CHECK(std::abs(mean(a) - mean(b)) < 0.05);
  CHECK(ks_distance(a, b) < 0.05);
}

TEST_CASE("records carry the centring") {
  const auto fp = find_front_params(flat());
  const auto r = split_max_samples(flat(), fp, 3.0, 8, 1, split_at(1.0));
  for (const auto& x : r) {
    CHECK(x.centered == doctest::Approx(x.max - front_position(fp, 3.0)));
    CHECK(x.pruned == 0);
  }
}
