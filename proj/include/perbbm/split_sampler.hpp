#pragma once

// Sampling of the maximum M_t without pruning, through the branching property.
// The process runs in full up to a split time s. Given the particles X_i at s,
//   P(M_t <= x | F_s) = prod_i F(t - s, X_i; x),   F(tau, y; x) = P^y(M_tau <= x),
// and M_t is drawn by inverting this distribution function.
//
// F(tau, y; x) = u(tau, x - y), where u solves the F-KPP equation with data
// 1{z >= 0} for the process Z = x - X. The medium of Z depends on the
// fractional part of x, so one solution is tabulated per grid phase of x.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "perbbm/bbm_sim.hpp"
#include "perbbm/eigen.hpp"
#include "perbbm/env.hpp"
#include "perbbm/parallel.hpp"

namespace perbbm {

/// F(tau, y; x) for x on the grid dx Z and any real y.
class MaxLawTable {
 public:
  /// dx must be period / m for an integer m; the table holds m PDE solutions.
  MaxLawTable(const EnvironmentSpec& env, double tau, double dx = 1.0 / 32.0, Exec exec = Exec::parallel);

  double tau() const { return tau_; }
  double dx() const { return dx_; }
  long cells_per_period() const { return cells_; }

  /// P^y(M_tau <= q dx), linear in y between grid points.
  double cdf(double y, long q) const;

 private:
  double tau_;
  double dx_;
  long cells_;
  std::vector<long> offsets_;
  std::vector<std::vector<double>> frames_;
};

/// The x with prod_i F(tau, y_i; x) = u, linear in x between grid points.
/// Requires at least one position and u in (0, 1).
double sample_conditional_max(const MaxLawTable& law, std::span<const double> positions, double u);

struct SplitSampleOptions {
  double split_time = 4.0;
  double dx = 1.0 / 32.0;
  /// Euler-Maruyama step before the split (non-standard motion only).
  double dt = kMaxDt;
  double x0 = 0.0;
  std::size_t hard_cap = 2'000'000;
  /// Trial k runs on trial_stream(seed, first_trial + k); its inversion level
  /// comes from a tagged stream, so runs with different split times share it.
  std::uint64_t first_trial = 0;
  Exec exec = Exec::parallel;
};

/// Independent maxima at time t; split_time must lie in (0, t).
std::vector<MaxRecord> split_max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t,
                                         std::size_t trials, std::uint64_t seed, const SplitSampleOptions& opt = {});

/// Same with a prebuilt table for tau = t - split_time.
std::vector<MaxRecord> split_max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t,
                                         std::size_t trials, std::uint64_t seed, const MaxLawTable& law,
                                         const SplitSampleOptions& opt = {});

}  // namespace perbbm
