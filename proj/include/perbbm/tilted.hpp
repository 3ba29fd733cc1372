#pragma once

// The tilted single-particle diffusion dY = phi(Y) dt + dW, its renewal times
// T_k = inf{t : Y_t >= k}, the centred walk S_k = T_k - k / v*, and barrier
// probabilities of that walk and of the path itself.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "perbbm/eigen.hpp"
#include "perbbm/parallel.hpp"
#include "perbbm/rng.hpp"

namespace perbbm {

inline constexpr double kTiltedDt = 1e-3;

struct TiltedPath {
  double x0 = 0.0;
  double dt = kTiltedDt;
  /// Y at 0, dt, 2 dt, ...; size = round(horizon / dt) + 1.
  std::vector<double> values;
  std::uint64_t seed = 0;

  double horizon() const { return dt * static_cast<double>(values.size() - 1); }
};

/// Euler-Maruyama path with drift phi and unit volatility. Same (seed, dt, x0)
/// gives the same path.
TiltedPath simulate_tilted(const TiltDrift& drift, double x0, double horizon, double dt, std::uint64_t seed);
TiltedPath simulate_tilted(const TiltDrift& drift, double x0, double horizon, double dt, rng::Stream stream);

struct RenewalRecord {
  std::vector<double> T;
  std::vector<double> S;
};

/// Crossing times of the levels 1..K (first grid step at or above the level,
/// interpolated linearly inside the step) and S_k = T_k - k / v_star.
/// Throws std::runtime_error when level K is not reached.
RenewalRecord renewal_times(const TiltedPath& path, std::size_t K, double v_star);

/// Y_T for independent paths started at x0; trial k uses trial_stream(seed, k).
std::vector<double> tilted_endpoints(const TiltDrift& drift, double x0, double horizon, double dt,
                                     std::size_t trials, std::uint64_t seed, Exec exec = Exec::parallel);

/// First-passage times of Y from x0 to `level`, interpolated inside the
/// crossing step. Paths longer than max_time throw.
std::vector<double> first_passage_times(const TiltDrift& drift, double x0, double level, double dt,
                                        std::size_t trials, std::uint64_t seed, Exec exec = Exec::parallel,
                                        double max_time = 1e4);

struct BarrierQuery {
  std::size_t N = 0;
  double y = 0.0;
  double z = 0.0;
  double a = 1.0;
  /// Drift correction: S_k^(N) = S_k + k d_N.
  double d_N = 0.0;
};

struct BarrierEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t trials = 0;
  /// One-sided 95% upper bound on p (exact binomial when hits = 0: 1 - 0.05^(1/trials)).
  double upper_bound = 0.0;
};

BarrierEstimate binomial_estimate(std::size_t hits, std::size_t trials);

inline constexpr std::size_t kMinBarrierTrials = 10'000;

/// Samples of T_1 from a periodic start, used as i.i.d. renewal increments.
struct RenewalIncrementPool {
  std::vector<double> increments;
  double v_star = 0.0;

  /// Draws a pool of `size` first-passage times from 0 to 1.
  static RenewalIncrementPool sample(const TiltDrift& drift, double v_star, std::size_t size, std::uint64_t seed,
                                     double dt = kTiltedDt, Exec exec = Exec::parallel);
  double mean() const;
};

/// P(y + S_N^(N) in [z, z + a], min_{k <= N} (y + S_k^(N)) >= 0) by direct
/// sampling of N renewal increments per trial, resampled from `pool`.
BarrierEstimate estimate_barrier(const RenewalIncrementPool& pool, const BarrierQuery& q, std::size_t trials,
                                 std::uint64_t seed, Exec exec = Exec::parallel);

/// Same event with every increment simulated afresh as a first passage.
BarrierEstimate estimate_barrier_direct(const TiltDrift& drift, double v_star, const BarrierQuery& q,
                                        std::size_t trials, std::uint64_t seed, double dt = kTiltedDt,
                                        Exec exec = Exec::parallel);

/// P(y - (Y_t - q_t t) in [z, z + 1], max_{s <= t} (Y_s - q_t s) <= y) for paths
/// from 0, with the barrier checked on the time grid. Requires y >= 1, t >= 4.
BarrierEstimate continuous_barrier(const TiltDrift& drift, const FrontParams& fp, double t, double y, double z,
                                   std::size_t trials, std::uint64_t seed, double dt = kTiltedDt,
                                   Exec exec = Exec::parallel);

/// Least-squares slope of log p against log N (or log t).
double log_log_slope(std::span<const double> n, std::span<const double> p);

}  // namespace perbbm
