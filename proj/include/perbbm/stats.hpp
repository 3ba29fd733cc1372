#pragma once

// Estimators on samples of centred maxima: right-tail fits, fixed-phase time
// subsequences, two-sample Kolmogorov-Smirnov distances and the tail profile nu.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "perbbm/bbm_sim.hpp"
#include "perbbm/eigen.hpp"
#include "perbbm/env.hpp"

namespace perbbm {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TailModel { pure_exponential, y_times_exponential };

struct TailFit {
  TailModel model = TailModel::y_times_exponential;
  /// Grid points used by the fit and the empirical log P(X > y) there.
  std::vector<double> y_grid;
  std::vector<double> log_survival;
  std::vector<std::size_t> hits;
  double lambda_hat = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinTailSamples = 10'000;
inline constexpr std::size_t kMinBinHits = 50;

/// Survival counts at y_min, y_min + step, ... <= y_max. Points with fewer than
/// 50 exceedances are dropped; the rest enter a least-squares fit of
/// log P(X > y) (pure) or log(P(X > y) / y) against y, weighted by the counts.
TailFit tail_fit(std::span<const double> samples, double y_min, double y_max, TailModel model,
                 double step = 0.25);

struct SubsequenceSpec {
  double p = 0.0;
  std::vector<double> times;
};

/// Distance between fractional parts on the circle R / Z.
double fractional_distance(double a, double b);

/// The first `count` times t >= t_min with frac(m_t) = p, by bisection on the
/// increasing map t -> m_t.
SubsequenceSpec subsequence_times(const FrontParams& fp, double p, double t_min, std::size_t count);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Asymptotic p-value of the two-sample statistic d for sample sizes n and m.
double ks_pvalue(double d, std::size_t n, std::size_t m);

struct NuPoint {
  double t = 0.0;
  /// frac(m_t + y).
  double phase = 0.0;
  double nu_hat = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t trials = 0;
};

/// nu_hat(t) = P(M_t > m_t + y) / (psi(0, lambda*) y exp(-lambda* y)) from runs
/// started at 0, one point per time in t_grid.
std::vector<NuPoint> nu_profile(const EnvironmentSpec& env, const FrontParams& fp, std::span<const double> t_grid,
                                double y, std::size_t trials, std::uint64_t seed, const MaxSampleOptions& opt = {});

/// nu_hat from a given set of centred maxima at time t.
NuPoint nu_from_samples(std::span<const double> centered, const FrontParams& fp, double psi0, double t, double y);

}  // namespace perbbm
