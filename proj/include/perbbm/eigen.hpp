#pragma once

// Principal eigenvalue problems of the periodic tilted generator and of the
// branching-random-walk transfer operator, and the front constants derived
// from them.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "perbbm/env.hpp"

namespace perbbm {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cyclic tridiagonal matrix on n points:
///   (A v)_i = lower_i v_{i-1} + diag_i v_i + upper_i v_{i+1}   (indices mod n).
/// Stored through its row sums, so that A v can be evaluated in the
/// cancellation-free form lower_i (v_{i-1} - v_i) + upper_i (v_{i+1} - v_i) + row_sum_i v_i.
struct PeriodicTridiagonal {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> row_sum;
  double period = 1.0;

  std::size_t size() const { return row_sum.size(); }
  double diag(std::size_t i) const { return row_sum[i] - lower[i] - upper[i]; }
  void apply(std::span<const double> v, std::span<double> out) const;
  Eigen::MatrixXd to_dense() const;
};

inline constexpr std::size_t kMinGrid = 4;

/// Second-order central discretization (periodic wrap) of
///   (sigma^2/2) d2 + (mu + lambda sigma^2) d + (lambda mu + lambda^2 sigma^2 / 2 + (rho - 1) g).
/// With mu = 0, sigma = 1, rho = 2 this is the BBM operator 1/2 d2 + lambda d + lambda^2/2 + g.
PeriodicTridiagonal assemble_generator(const EnvironmentSpec& env, double lambda,
                                       std::size_t n_grid = kDefaultGrid);

struct EigenPair {
  double lambda = 0.0;
  double gamma = 0.0;
  PeriodicFunction psi = PeriodicFunction::constant(1.0);
  /// ||A psi - gamma psi||_inf / ||psi||_inf.
  double residual_norm = 0.0;
  /// Width of the Collatz-Wielandt bracket around gamma (0 for dense solves).
  double bracket_width = 0.0;
};

/// Perron pair of a generator with non-negative off-diagonal entries.
///
/// Noda-type inverse iteration: the shift is the upper Collatz-Wielandt bound
/// max_i (A x)_i / x_i, which stays above the Perron root, so every shifted
/// solve is an M-matrix solve with a positive solution. Iteration stops when the
/// bracket [min_i, max_i] is narrower than tolerance * max(1, |gamma|) or stops
/// shrinking.
EigenPair principal_eigenpair(const PeriodicTridiagonal& op, double lambda, double tolerance = 1e-13);

/// Eigenvalue of largest real part of a dense matrix, via a full
/// eigendecomposition. The eigenvector must have one sign.
EigenPair principal_eigenpair(const Eigen::MatrixXd& matrix, double lambda, double period,
                              double tolerance = 1e-9);

EigenPair solve_eigenpair(const EnvironmentSpec& env, double lambda, std::size_t n_grid = kDefaultGrid);

struct GammaPoint {
  double lambda;
  double gamma;
  double residual;
};

std::vector<GammaPoint> gamma_curve(const EnvironmentSpec& env, std::span<const double> lambdas,
                                    std::size_t n_grid = kDefaultGrid);

struct FrontParams {
  bool attained = false;
  std::optional<double> lambda_star;
  std::optional<double> v_star;
  std::optional<double> gamma_star;
  std::optional<double> log_coeff;
  /// |gamma'(lambda*) - v*| with central differences of step 1e-4.
  double stationarity_gap = 0.0;

  /// Accessors for the attained case; throw SolverError otherwise.
  double lambda() const;
  double speed() const;
  double log_coefficient() const;
};

inline constexpr double kLambdaCeiling = 50.0;

/// Minimizes gamma(lambda)/lambda over lambda > 0: bracket by doubling/halving
/// from lambda = 1, golden section to width `tol`, then a few secant steps on
/// lambda gamma'(lambda) - gamma(lambda) = 0. A ratio that keeps
/// decreasing up to `lambda_max` is reported as not attained.
FrontParams minimize_speed(const std::function<double(double)>& gamma, double tol = 1e-8,
                           double lambda_max = kLambdaCeiling);

FrontParams find_front_params(const EnvironmentSpec& env, double tol = 1e-8, std::size_t n_grid = kDefaultGrid);

/// m_t = v* t - (3 / (2 lambda*)) log t, for t >= 1.
double front_position(const FrontParams& fp, double t);
/// q_t = m_t / t.
double front_slope(const FrontParams& fp, double t);

struct TiltDrift {
  PeriodicFunction phi = PeriodicFunction::constant(0.0);
  double lambda = 0.0;
  double gamma = 0.0;
  /// sup_x |sigma^2/2 (phi_x + phi^2) + mu phi - gamma + (rho - 1) g| on the grid;
  /// for BBM this is |phi_x/2 + phi^2/2 - gamma + g|.
  double residual = 0.0;
};

TiltDrift tilt_drift(const EigenPair& ep, const EnvironmentSpec& env);

/// Nearest-neighbour branching random walk with L-periodic kernel and offspring.
struct BRWModel {
  unsigned L = 1;
  std::vector<double> p_left, p_stay, p_right;
  OffspringLaw offspring = OffspringLaw::deterministic(2);

  double rho(long x) const;
  std::size_t site(long x) const;
  /// Throws ConfigError on bad rows, SolverError on a reducible kernel.
  void validate() const;
};

struct TransferMatrix {
  double lambda = 0.0;
  Eigen::MatrixXd entries;
};

/// One-step operator on period classes:
///   entries(x, y mod L) = sum_{|y - x| <= 1} rho(x) p(x, y) exp(lambda (y - x)).
TransferMatrix brw_transfer(const BRWModel& model, double lambda);

/// gamma(lambda) = log of the spectral radius of the one-step transfer matrix.
double brw_gamma(const BRWModel& model, double lambda);

FrontParams brw_front_params(const BRWModel& model, double tol = 1e-8);

}  // namespace perbbm
