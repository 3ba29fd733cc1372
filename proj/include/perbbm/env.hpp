#pragma once

// Periodic environments: branching rate g, drift mu, volatility sigma and
// position-dependent offspring laws.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace perbbm {

/// Invalid configuration or environment (bad syntax, non-positive rate, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultGrid = 1024;

enum class Interpolation { linear, trigonometric };

struct Bounds {
  double min;
  double max;
};

/// A real function with period `period`, stored as samples on the uniform grid
/// x_i = i * period / n, i = 0..n-1.
///
/// Functions built from an expression keep the expression, so that other grids
/// (see grid_values) are sampled exactly instead of through the interpolant.
/// Evaluation reduces x with std::fmod, which is exact; f(x) and f(x + k*period)
/// are therefore bitwise equal whenever x + k*period is itself representable.
class PeriodicFunction {
 public:
  PeriodicFunction(std::vector<double> samples, double period = 1.0,
                   Interpolation mode = Interpolation::linear);

  static PeriodicFunction constant(double value, double period = 1.0);
  static PeriodicFunction from_expression(std::string_view text, double period = 1.0,
                                          std::size_t n = kDefaultGrid,
                                          Interpolation mode = Interpolation::linear);
  /// Samples `fn` on the grid and keeps it as the exact source.
  static PeriodicFunction from_callable(std::function<double(double)> fn, double period = 1.0,
                                        std::size_t n = kDefaultGrid,
                                        Interpolation mode = Interpolation::linear);

  double operator()(double x) const;

  /// x mapped into [0, period).
  double reduce(double x) const;

  /// Extrema of the interpolant over one period.
  Bounds bounds() const;

  /// Values at i * period / n. Exact when an expression source is attached.
  std::vector<double> grid_values(std::size_t n) const;

  /// The function x -> f(x + shift).
  PeriodicFunction shifted(double shift) const;

  /// The function x -> sign * f(-x).
  PeriodicFunction reflected(double sign = 1.0) const;

  double period() const { return period_; }
  std::size_t size() const { return samples_.size(); }
  std::span<const double> samples() const { return samples_; }
  Interpolation interpolation() const { return mode_; }
  bool has_source() const { return static_cast<bool>(source_); }
  bool is_constant() const;

 private:
  double eval_linear(double r) const;
  double eval_trigonometric(double r) const;

  std::vector<double> samples_;
  double period_;
  Interpolation mode_;
  std::function<double(double)> source_;
  // Real Fourier coefficients for trigonometric mode: a_k cos + b_k sin.
  std::vector<double> cos_coef_, sin_coef_;
};

double eval_periodic(const PeriodicFunction& f, double x);
Bounds bounds(const PeriodicFunction& f);

/// Position-dependent offspring distribution. The period is split into
/// `cells()` equal cells; cell c carries probabilities[c][k] = P(k children).
class OffspringLaw {
 public:
  explicit OffspringLaw(std::vector<std::vector<double>> probabilities, double period = 1.0);

  /// Every particle is replaced by exactly k children.
  static OffspringLaw deterministic(unsigned k, double period = 1.0);

  std::size_t cells() const { return probs_.size(); }
  std::size_t cell(double x) const;
  std::span<const double> probabilities(std::size_t cell) const { return probs_[cell]; }
  double period() const { return period_; }

  /// First and second moments per cell.
  double rho(std::size_t cell) const { return rho_[cell]; }
  double kappa(std::size_t cell) const { return kappa_[cell]; }
  double rho_at(double x) const { return rho_[cell(x)]; }
  double kappa_at(double x) const { return kappa_[cell(x)]; }

  /// Number of children drawn by inverse CDF from a uniform u in (0, 1).
  unsigned sample(double x, double u) const;
  unsigned sample_cell(std::size_t cell, double u) const;

  /// Probability generating function sum_k pi_k(x) s^k.
  double generating(std::size_t cell, double s) const;

  /// Smallest number of children with positive probability anywhere.
  std::size_t min_children() const;
  std::size_t max_children() const;
  bool is_binary() const;

 private:
  std::vector<std::vector<double>> probs_;
  std::vector<std::vector<double>> cdf_;
  std::vector<double> rho_, kappa_;
  double period_;
};

enum class ModelKind { continuous, lattice };

struct EnvironmentSpec {
  PeriodicFunction g = PeriodicFunction::constant(1.0);
  std::optional<PeriodicFunction> mu;
  std::optional<PeriodicFunction> sigma;
  std::optional<OffspringLaw> offspring;

  double period() const { return g.period(); }
  double mu_at(double x) const { return mu ? (*mu)(x) : 0.0; }
  double sigma_at(double x) const { return sigma ? (*sigma)(x) : 1.0; }
  double rho_at(double x) const { return offspring ? offspring->rho_at(x) : 2.0; }

  /// mu == 0 and sigma == 1 (absent, or given as those constants).
  bool standard_motion() const;
  bool binary_offspring() const { return !offspring || offspring->is_binary(); }

  /// Model-specific checks: no mass on {0, 1} children for continuous models,
  /// none on {0} and rho > 1 for lattice models. Throws ConfigError.
  void validate(ModelKind kind) const;
};

/// Environment of the mirrored process -X: g(-x), -mu(-x), sigma(-x) and the
/// offspring cells in reverse order. Fronts of the F-KPP equation with data
/// 1{x >= 0} move at the speed of this environment.
EnvironmentSpec reflected_env(const EnvironmentSpec& env);

/// Environment translated by `shift`: every coefficient x -> f(x + shift).
/// Position-dependent offspring laws need a shift that is a whole number of
/// cells. Throws ConfigError otherwise.
EnvironmentSpec shifted_env(const EnvironmentSpec& env, double shift);

/// Parses the JSON environment grammar (keys period, g, mu, sigma, offspring,
/// interpolation, grid). Throws ConfigError.
EnvironmentSpec parse_env(std::string_view config_text);

}  // namespace perbbm
