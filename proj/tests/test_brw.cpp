#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "perbbm/brw_sim.hpp"

using namespace perbbm;

namespace {

BRWModel walk(double l, double s, double r) {
  BRWModel m;
  m.p_left = {l};
  m.p_stay = {s};
  m.p_right = {r};
  return m;
}

double binom(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

}  // namespace

TEST_CASE("deterministic rightward walk") {
  const auto pop = run_brw(walk(0, 0, 1), 12, 5, rng::Stream(1, 1));
  CHECK(pop.max_position == 12);
  CHECK(pop.total() == 4096);
  CHECK(pop.counts.back() == 4096);
  CHECK(pop.counts.size() <= 6);
  CHECK(pop.pruned == 0);
}

TEST_CASE("population accounting without pruning") {
  const auto pop = run_brw(walk(0.25, 0.5, 0.25), 10, 1000, rng::Stream(2, 2));
  CHECK(pop.total() == 1024);
  CHECK(pop.base >= -10);
  CHECK(pop.max_position <= 10);
  CHECK(pop.base + static_cast<long>(pop.counts.size()) - 1 == pop.max_position);
  CHECK(pop.counts.back() > 0);
}

TEST_CASE("pruning keeps the window below the maximum") {
  const auto pop = run_brw(walk(0.25, 0.5, 0.25), 30, 3, rng::Stream(3, 3));
  CHECK(pop.base >= pop.max_position - 3);
  CHECK(pop.pruned > 0);
  CHECK_THROWS(run_brw(walk(0.25, 0.5, 0.25), 3, 0, rng::Stream(3, 3)));
}

TEST_CASE("expected occupation of a site") {
  // E[count at 0 after 4 generations] = 2^4 P(lazy walk at 0) = 16 * C(8, 4) / 4^4.
  const auto m = walk(0.25, 0.5, 0.25);
  std::vector<double> c;
  for (std::uint64_t k = 0; k < 20000; ++k) {
    const auto pop = run_brw(m, 4, 100, rng::trial_stream(9, k));
    const long i = -pop.base;
    c.push_back(i >= 0 && i < static_cast<long>(pop.counts.size()) ? static_cast<double>(pop.counts[i]) : 0.0);
  }
  const double mean = std::accumulate(c.begin(), c.end(), 0.0) / c.size();
  double var = 0.0;
  for (double x : c) var += (x - mean) * (x - mean);
  var /= c.size() - 1;
  CHECK(std::abs(mean - 16.0 * binom(8, 4) / 256.0) < 4.0 * std::sqrt(var / c.size()));
}

TEST_CASE("lattice values and determinism of samples") {
  const auto m = walk(0.25, 0.5, 0.25);
  const auto a = simulate_brw(m, 40, 8, 200, 4);
  const auto b = simulate_brw(m, 40, 8, 200, 4, Exec::serial);
  CHECK(a.max == b.max);
  CHECK(a.centered == b.centered);
  const auto fp = require_brw_front(m);
  CHECK(a.m_n == doctest::Approx(front_position(fp, 40.0)));
  for (std::size_t k = 0; k < a.max.size(); ++k) {
    REQUIRE(a.centered[k] == static_cast<double>(a.max[k]) - a.m_n);
  }
  const auto c = simulate_brw(m, 40, 8, 100, 4, Exec::parallel, 100);
  CHECK(std::equal(c.max.begin(), c.max.end(), a.max.begin() + 100));
}

TEST_CASE("centred maximum of the lazy walk stays bounded") {
  const auto m = walk(0.25, 0.5, 0.25);
  for (std::size_t n : {25, 50}) {
    auto s = simulate_brw(m, n, 10, 400, 30 + n);
    std::nth_element(s.centered.begin(), s.centered.begin() + 200, s.centered.end());
    CHECK(std::abs(s.centered[200]) <= 5.0);
  }
}

TEST_CASE("regime errors") {
  CHECK_THROWS_AS(require_brw_front(walk(0.5, 0, 0.5)), RegimeError);
  CHECK_THROWS_AS(simulate_brw(walk(0.5, 0, 0.5), 10, 5, 10, 1), RegimeError);
  CHECK_THROWS_AS(simulate_brw(walk(0.25, 0.5, 0.25), 0, 5, 10, 1), std::invalid_argument);
}
