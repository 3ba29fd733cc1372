#include "perbbm/tilted.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace perbbm {

namespace {

void check_dt(double dt) {
  if (!(dt > 0.0) || dt > 1e-2) throw std::invalid_argument("dt must lie in (0, 1e-2]");
}

std::size_t step_count(double horizon, double dt) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

// Time at which the path first reaches `level`, or a negative value when it
// does not within max_steps. A step that ends below the level still counts as a
// crossing with the Brownian-bridge probability exp(-2 a b / dt), a and b being
// the distances of its end points to the level; without this the passage is
// late by O(sqrt(dt)).
double passage(const PeriodicFunction& phi, double x0, double level, double dt, std::size_t max_steps,
               rng::Stream& s) {
  if (x0 >= level) return 0.0;
  const double sdt = std::sqrt(dt);
  double y = x0;
  for (std::size_t i = 0; i < max_steps; ++i) {
    const double next = y + phi(y) * dt + sdt * s.normal();
    const double a = level - y, b = level - next;
    if (b <= 0.0) return (static_cast<double>(i) + a / (a - b)) * dt;
    if (a * b < 20.0 * dt && s.uniform() < std::exp(-2.0 * a * b / dt)) {
      return (static_cast<double>(i) + a / (a + b)) * dt;
    }
    y = next;
  }
  return -1.0;
}

}  // namespace

TiltedPath simulate_tilted(const TiltDrift& drift, double x0, double horizon, double dt, rng::Stream stream) {
  check_dt(dt);
  const std::size_t steps = step_count(horizon, dt);
  TiltedPath path;
  path.x0 = x0;
  path.dt = dt;
  path.seed = stream.seed();
  path.values.resize(steps + 1);
  path.values[0] = x0;
  const double sdt = std::sqrt(dt);
  double y = x0;
  for (std::size_t i = 1; i <= steps; ++i) {
    y += drift.phi(y) * dt + sdt * stream.normal();
    path.values[i] = y;
  }
  return path;
}

TiltedPath simulate_tilted(const TiltDrift& drift, double x0, double horizon, double dt, std::uint64_t seed) {
  return simulate_tilted(drift, x0, horizon, dt, rng::trial_stream(seed, 0));
}

RenewalRecord renewal_times(const TiltedPath& path, std::size_t K, double v_star) {
  RenewalRecord rec;
  rec.T.reserve(K);
  rec.S.reserve(K);
  const auto& y = path.values;
  std::size_t i = 0;
  for (std::size_t k = 1; k <= K; ++k) {
    const double level = static_cast<double>(k);
    while (i < y.size() && y[i] < level) ++i;
    if (i == y.size()) throw std::runtime_error("level " + std::to_string(K) + " not reached by the path");
    double t = 0.0;
    if (i > 0) t = (static_cast<double>(i - 1) + (level - y[i - 1]) / (y[i] - y[i - 1])) * path.dt;
    rec.T.push_back(t);
    rec.S.push_back(t - level / v_star);
  }
  return rec;
}

std::vector<double> tilted_endpoints(const TiltDrift& drift, double x0, double horizon, double dt,
                                     std::size_t trials, std::uint64_t seed, Exec exec) {
  check_dt(dt);
  const std::size_t steps = step_count(horizon, dt);
  const double sdt = std::sqrt(dt);
  std::vector<double> out(trials);
  for_each_index(trials, exec, [&](std::size_t k) {
    auto s = rng::trial_stream(seed, k);
    double y = x0;
    for (std::size_t i = 0; i < steps; ++i) y += drift.phi(y) * dt + sdt * s.normal();
    out[k] = y;
  });
  return out;
}

std::vector<double> first_passage_times(const TiltDrift& drift, double x0, double level, double dt,
                                        std::size_t trials, std::uint64_t seed, Exec exec, double max_time) {
  check_dt(dt);
  const auto max_steps = static_cast<std::size_t>(std::ceil(max_time / dt));
  std::vector<double> out(trials);
  for_each_index(trials, exec, [&](std::size_t k) {
    auto s = rng::trial_stream(seed, k);
    out[k] = passage(drift.phi, x0, level, dt, max_steps, s);
    if (out[k] < 0.0) throw std::runtime_error("first passage exceeded max_time");
  });
  return out;
}

BarrierEstimate binomial_estimate(std::size_t hits, std::size_t trials) {
  BarrierEstimate e;
  e.hits = hits;
  e.trials = trials;
  if (trials == 0) return e;
  const double n = static_cast<double>(trials);
  e.p_hat = static_cast<double>(hits) / n;
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
  e.upper_bound = hits == 0 ? 1.0 - std::pow(0.05, 1.0 / n) : std::min(1.0, e.p_hat + 1.6448536269514722 * e.std_error);
  return e;
}

RenewalIncrementPool RenewalIncrementPool::sample(const TiltDrift& drift, double v_star, std::size_t size,
                                                  std::uint64_t seed, double dt, Exec exec) {
  RenewalIncrementPool pool;
  pool.v_star = v_star;
  pool.increments = first_passage_times(drift, 0.0, 1.0, dt, size, seed, exec);
  return pool;
}

double RenewalIncrementPool::mean() const {
  double s = 0.0;
  for (double v : increments) s += v;
  return increments.empty() ? 0.0 : s / static_cast<double>(increments.size());
}

namespace {

void check_query(const BarrierQuery& q, std::size_t trials) {
  if (trials < kMinBarrierTrials) throw std::invalid_argument("barrier estimates need at least 10^4 trials");
  if (q.N < 1) throw std::invalid_argument("N must be positive");
  if (!(q.y >= 0.0) || !(q.z >= 0.0) || !(q.a > 0.0)) throw std::invalid_argument("need y >= 0, z >= 0, a > 0");
}

// Runs one walk; `next` returns the k-th increment T_k - T_{k-1}.
template <class Next>
bool walk_hits(const BarrierQuery& q, double v_star, Next&& next) {
  const double step_shift = q.d_N - 1.0 / v_star;
  double s = q.y;
  for (std::size_t k = 1; k <= q.N; ++k) {
    s += next() + step_shift;
    if (s < 0.0) return false;
  }
  return s >= q.z && s <= q.z + q.a;
}

}  // namespace

BarrierEstimate estimate_barrier(const RenewalIncrementPool& pool, const BarrierQuery& q, std::size_t trials,
                                 std::uint64_t seed, Exec exec) {
  check_query(q, trials);
  if (pool.increments.empty()) throw std::invalid_argument("empty increment pool");
  const auto size = static_cast<std::uint64_t>(pool.increments.size());
  std::vector<unsigned char> hit(trials, 0);
  for_each_index(trials, exec, [&](std::size_t k) {
    auto s = rng::trial_stream(seed, k);
    hit[k] = walk_hits(q, pool.v_star, [&] {
      // Multiply-shift reduction of a 64-bit draw onto [0, size).
      const auto idx = static_cast<std::size_t>((static_cast<unsigned __int128>(s()) * size) >> 64);
      return pool.increments[idx];
    });
  });
  std::size_t hits = 0;
  for (auto h : hit) hits += h;
  return binomial_estimate(hits, trials);
}

BarrierEstimate estimate_barrier_direct(const TiltDrift& drift, double v_star, const BarrierQuery& q,
                                        std::size_t trials, std::uint64_t seed, double dt, Exec exec) {
  check_query(q, trials);
  check_dt(dt);
  const auto max_steps = static_cast<std::size_t>(std::ceil(1e4 / dt));
  std::vector<unsigned char> hit(trials, 0);
  for_each_index(trials, exec, [&](std::size_t k) {
    auto s = rng::trial_stream(seed, k);
    hit[k] = walk_hits(q, v_star, [&] {
      const double t = passage(drift.phi, 0.0, 1.0, dt, max_steps, s);
      if (t < 0.0) throw std::runtime_error("first passage exceeded max_time");
      return t;
    });
  });
  std::size_t hits = 0;
  for (auto h : hit) hits += h;
  return binomial_estimate(hits, trials);
}

BarrierEstimate continuous_barrier(const TiltDrift& drift, const FrontParams& fp, double t, double y, double z,
                                   std::size_t trials, std::uint64_t seed, double dt, Exec exec) {
  if (!(y >= 1.0)) throw std::invalid_argument("continuous barrier needs y >= 1");
  if (!(t >= 4.0)) throw std::invalid_argument("continuous barrier needs t >= 4");
  check_dt(dt);
  const double q = front_slope(fp, t);
  const std::size_t steps = step_count(t, dt);
  const double sdt = std::sqrt(dt);
  std::vector<unsigned char> hit(trials, 0);
  for_each_index(trials, exec, [&](std::size_t k) {
    auto s = rng::trial_stream(seed, k);
    double x = 0.0;
    for (std::size_t i = 1; i <= steps; ++i) {
      x += drift.phi(x) * dt + sdt * s.normal();
      if (x - q * static_cast<double>(i) * dt > y) return;
    }
    const double gap = y - (x - q * t);
    hit[k] = gap >= z && gap <= z + 1.0;
  });
  std::size_t hits = 0;
  for (auto h : hit) hits += h;
  return binomial_estimate(hits, trials);
}

double log_log_slope(std::span<const double> n, std::span<const double> p) {
  if (n.size() != p.size() || n.size() < 2) throw std::invalid_argument("need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(p[i] > 0.0)) throw std::invalid_argument("log-log slope needs positive probabilities");
    mx += std::log(n[i]);
    my += std::log(p[i]);
  }
  mx /= static_cast<double>(n.size());
  my /= static_cast<double>(n.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(n[i]) - mx;
    sxy += dx * (std::log(p[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace perbbm
