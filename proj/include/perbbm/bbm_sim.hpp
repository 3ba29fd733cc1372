#pragma once

// Branching Brownian motion (and branching diffusions) in a periodic medium.
//
// Branch times come from thinning: candidate events at rate beta = max g,
// accepted with probability g(X) / beta. Between candidates a Brownian particle
// moves by an exact Gaussian increment; a general diffusion moves by
// Euler-Maruyama substeps of at most dt. Particles further than `window` below
// the running maximum are discarded at every pruning sweep.
//
// Each particle owns a random stream derived from its parent's stream and its
// birth order, so a particle's life does not depend on the rest of the
// population. Two runs with the same seed and different windows are therefore
// coupled: the narrower run is a sub-forest of the wider one.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "perbbm/eigen.hpp"
#include "perbbm/env.hpp"
#include "perbbm/parallel.hpp"
#include "perbbm/rng.hpp"

namespace perbbm {

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unsupported parameter regime (v* <= 0 or no minimizer).
class RegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Particle {
  double position = 0.0;
  std::uint64_t id = 0;
  std::uint64_t parent_id = 0;
};

struct PruneConfig {
  double window = 30.0;
  std::size_t hard_cap = 2'000'000;
  /// Time between pruning sweeps.
  double interval = 0.25;
  /// false disables pruning (the hard cap still applies).
  bool enabled = true;
};

struct PopulationSnapshot {
  double time = 0.0;
  std::vector<Particle> particles;
  double max_position = 0.0;
  std::uint64_t pruned_count = 0;
  double prune_window = 0.0;
  std::size_t peak_population = 1;
  std::uint64_t branch_events = 0;
  /// Time of the first accepted branching event (t_end if none).
  double first_branch_time = 0.0;
};

inline constexpr double kMaxDt = 1e-2;

/// Binary branching Brownian motion from a single particle at x0. `dt` is only
/// validated here (motion between events is exact).
PopulationSnapshot simulate_bbm(const EnvironmentSpec& env, double t_end, double dt, const PruneConfig& prune,
                                std::uint64_t seed, double x0 = 0.0);

/// Same with an explicit root stream.
PopulationSnapshot simulate_bbm(const EnvironmentSpec& env, double t_end, double dt, const PruneConfig& prune,
                                rng::Stream root, double x0 = 0.0);

/// Drift, volatility and offspring law from `env`. Rejects v* <= 0. With
/// standard motion and binary offspring this is simulate_bbm.
PopulationSnapshot simulate_diffusion_bbm(const EnvironmentSpec& env, double t_end, double dt,
                                          const PruneConfig& prune, std::uint64_t seed, double x0 = 0.0);

/// Throws RegimeError unless the continuous model has an attained v* > 0.
FrontParams require_positive_speed(const EnvironmentSpec& env);

struct MaxRecord {
  double max = 0.0;
  double centered = 0.0;
  std::uint64_t pruned = 0;
  std::size_t peak_population = 0;
};

struct MaxSampleOptions {
  double dt = kMaxDt;
  PruneConfig prune{};
  double x0 = 0.0;
  /// Trial k uses stream trial_stream(seed, first_trial + k).
  std::uint64_t first_trial = 0;
  Exec exec = Exec::parallel;
};

/// Independent runs to time t; records M_t and M_t - m_t per run. Uses the
/// general diffusion simulator when env has non-standard motion or offspring.
std::vector<MaxRecord> max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t, std::size_t trials,
                                   std::uint64_t seed, const MaxSampleOptions& opt = {});

/// Centered values of a record set.
std::vector<double> centered_values(const std::vector<MaxRecord>& records);

struct ManyToOneResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  double stderr_combined() const;
};

/// Branching side E[#{v : X_t^v in [a, b]}] from unpruned runs against the
/// Feynman-Kac side E[exp(int_0^t g(B_s) ds) 1{B_t in [a, b]}] from single paths
/// (trapezoid rule with step dt). An empty window (b <= a) gives zeros.
ManyToOneResult many_to_one_check(const EnvironmentSpec& env, double t, std::pair<double, double> window,
                                  std::size_t trials, std::uint64_t seed, double dt = 1e-3,
                                  Exec exec = Exec::parallel);

}  // namespace perbbm
