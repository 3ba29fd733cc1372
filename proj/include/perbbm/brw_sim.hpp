#pragma once

// Nearest-neighbour branching random walk on Z with L-periodic kernel and
// offspring law. The population is kept as counts per lattice site in a window
// below the running maximum; a generation draws offspring numbers and jump
// directions per site with binomial splits of the site count.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "perbbm/bbm_sim.hpp"
#include "perbbm/eigen.hpp"
#include "perbbm/parallel.hpp"
#include "perbbm/rng.hpp"

namespace perbbm {

struct BRWPopulation {
  std::size_t generation = 0;
  /// counts[i] particles at site base + i.
  long base = 0;
  std::vector<std::uint64_t> counts;
  long max_position = 0;
  std::uint64_t pruned = 0;

  std::uint64_t total() const;
};

inline constexpr std::uint64_t kBRWCap = 1'000'000'000'000'000ull;

/// One population run from a single particle at 0 for n_gen generations, keeping
/// sites in [max - window, max]. Throws CapExceeded above kBRWCap particles.
BRWPopulation run_brw(const BRWModel& model, std::size_t n_gen, long window, rng::Stream stream);

/// Front parameters of the model; throws RegimeError("minimizer not attained")
/// or RegimeError("unsupported regime: v* <= 0").
FrontParams require_brw_front(const BRWModel& model);

struct BRWSamples {
  std::size_t n = 0;
  double m_n = 0.0;
  std::vector<long> max;
  /// M_n - m_n, an element of -m_n + Z.
  std::vector<double> centered;
};

/// Trial k runs on trial_stream(seed, first_trial + k).
BRWSamples simulate_brw(const BRWModel& model, std::size_t n_gen, long prune_window, std::size_t trials,
                        std::uint64_t seed, Exec exec = Exec::parallel, std::uint64_t first_trial = 0);

}  // namespace perbbm
