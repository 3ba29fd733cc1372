#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "perbbm/bbm_sim.hpp"
#include "perbbm/config.hpp"

using namespace perbbm;

namespace {

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * (v.size() - 1))];
}

PruneConfig no_prune() {
  PruneConfig p;
  p.enabled = false;
  return p;
}

const EnvironmentSpec& flat() {
  static const EnvironmentSpec e = parse_env(R"({"g": "1"})");
  return e;
}

}  // namespace

TEST_CASE("zero horizon keeps the root") {
  const auto s = simulate_bbm(flat(), 0.0, 1e-2, PruneConfig{}, 1, 0.7);
  REQUIRE(s.particles.size() == 1);
  CHECK(s.particles[0].position == 0.7);
  CHECK(s.max_position == 0.7);
  CHECK(s.branch_events == 0);
}

TEST_CASE("argument checks") {
  CHECK_THROWS(simulate_bbm(flat(), -1.0, 1e-2, PruneConfig{}, 1));
  CHECK_THROWS(simulate_bbm(flat(), 1.0, 0.1, PruneConfig{}, 1));
  PruneConfig bad;
  bad.window = 0.0;
  CHECK_THROWS(simulate_bbm(flat(), 1.0, 1e-2, bad, 1));
  PruneConfig tiny;
  tiny.hard_cap = 10;
  CHECK_THROWS_AS(simulate_bbm(flat(), 10.0, 1e-2, tiny, 1), CapExceeded);
}

TEST_CASE("first branching time is exponential") {
  // E[min(T, c)] = (1 - e^{-c}) / beta for T ~ Exp(beta).
  std::vector<double> t;
  for (std::uint64_t k = 0; k < 20000; ++k) {
    t.push_back(simulate_bbm(flat(), 3.0, 1e-2, no_prune(), rng::trial_stream(77, k)).first_branch_time);
  }
  CHECK(std::abs(mean(t) - (1.0 - std::exp(-3.0))) < 4.0 * sd(t) / std::sqrt(t.size()));
}

TEST_CASE("expected population size") {
  std::vector<double> n2, n3;
  const auto triple = parse_env(R"({"g": "1", "offspring": [{"position_index": 0, "probabilities": [0, 0, 0, 1]}]})");
  for (std::uint64_t k = 0; k < 4000; ++k) {
    n2.push_back(simulate_bbm(flat(), 3.0, 1e-2, no_prune(), rng::trial_stream(5, k)).particles.size());
    n3.push_back(simulate_bbm(triple, 2.0, 1e-2, no_prune(), rng::trial_stream(6, k)).particles.size());
  }
  CHECK(std::abs(mean(n2) - std::exp(3.0)) < 4.0 * sd(n2) / std::sqrt(n2.size()));
  CHECK(std::abs(mean(n3) - std::exp(4.0)) < 4.0 * sd(n3) / std::sqrt(n3.size()));
}

TEST_CASE("centred maximum at t = 8 for a constant rate") {
  const auto fp = find_front_params(flat());
  const auto c = centered_values(max_samples(flat(), fp, 8.0, 400, 8));
  CHECK(std::abs(mean(c)) < 5.0);
  CHECK(quantile(c, 0.75) - quantile(c, 0.25) <= 10.0);
  CHECK(quantile(c, 0.75) - quantile(c, 0.25) > 0.1);
}

TEST_CASE("standard diffusion reduces to BBM") {
  const auto env = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)", "mu": "0", "sigma": "1"})j");
  REQUIRE(env.standard_motion());
  const auto plain = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  const auto a = simulate_diffusion_bbm(env, 4.0, 1e-2, PruneConfig{}, 12);
  const auto b = simulate_bbm(plain, 4.0, 1e-2, PruneConfig{}, 12);
  CHECK(a.max_position == b.max_position);
  CHECK(a.particles.size() == b.particles.size());
}

TEST_CASE("Euler motion tracks a constant drift") {
  const auto env = parse_env(R"({"g": "1", "mu": "0.3", "sigma": "0.5"})");
  std::vector<double> x;
  for (std::uint64_t k = 0; k < 4000; ++k) {
    const auto s = simulate_diffusion_bbm(env, 0.5, 1e-2, no_prune(), 100 + k);
    for (const auto& p : s.particles) x.push_back(p.position);
  }
  CHECK(mean(x) == doctest::Approx(0.15).epsilon(0.1));
}

TEST_CASE("many-to-one identity") {
  const auto r = many_to_one_check(flat(), 1.5, {0.0, 1.0}, 20000, 3);
  // For a constant rate the Feynman-Kac side is e^t P(B_t in [0, 1]).
  const double p = 0.5 * (std::erf(1.0 / std::sqrt(3.0)) - 0.0);
  CHECK(std::abs(r.rhs - std::exp(1.5) * p) < 4.0 * r.rhs_stderr);
  CHECK(std::abs(r.lhs - r.rhs) < 4.0 * r.stderr_combined());

  const auto empty = many_to_one_check(flat(), 1.5, {1.0, 1.0}, 100, 3);
  CHECK(empty.lhs == 0.0);
  CHECK(empty.rhs == 0.0);
}

TEST_CASE("coupling across pruning windows") {
  const auto env = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  int equal = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    PruneConfig narrow, wide;
    narrow.window = 3.0;
    wide.window = 8.0;
    const auto a = simulate_bbm(env, 8.0, 1e-2, narrow, seed);
    const auto b = simulate_bbm(env, 8.0, 1e-2, wide, seed);
    REQUIRE(a.max_position <= b.max_position);
    equal += a.max_position == b.max_position ? 1 : 0;
    for (const auto& p : a.particles) REQUIRE(p.position >= a.max_position - 3.0);
  }
  CHECK(equal >= 30);
}

TEST_CASE("regime guard") {
  // Strong negative drift: no positive speed.
  const auto env = parse_env(R"({"g": "0.1", "mu": "-3"})");
  CHECK_THROWS_AS(require_positive_speed(env), RegimeError);
  CHECK_THROWS_AS(simulate_diffusion_bbm(env, 1.0, 1e-2, PruneConfig{}, 1), RegimeError);
}
