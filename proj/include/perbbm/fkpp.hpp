#pragma once

// F-KPP equation in a periodic medium,
//   u_t = sigma^2(x)/2 u_xx + mu(x) u_x + g(x) (sum_k pi_k(x) u^k - u),   u(0, x) = 1{x >= 0},
// integrated on a moving window that follows the front. The state u = 0 invades
// u = 1, so level sets of u move to the right.
//
// The solver evolves w = 1 - u, which keeps full relative precision in the
// leading edge where u is within rounding of 1; frames are reported as u.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "perbbm/env.hpp"
#include "perbbm/parallel.hpp"

namespace perbbm {

class PdeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  double dx = 1.0 / 64.0;
  /// 0 picks the largest stable step that divides frame_interval.
  double dt = 0.0;
  double window_width = 80.0;
  /// Distance from the left edge of the window to the initial jump; the window
  /// is shifted back to this placement whenever the front has advanced by more
  /// than recenter_band.
  double left_pad = 20.0;
  double recenter_band = 8.0;
  double frame_interval = 0.25;
  double safety = 0.9;
  /// Only frames with time >= keep_frames_from are stored; the crossing of
  /// track_level is recorded at every frame time regardless.
  double keep_frames_from = 0.0;
  double track_level = 0.5;
  Exec exec = Exec::parallel;
};

/// Largest explicit step allowed by safety * dx^2 / (2 max sigma^2).
double stable_dt(const EnvironmentSpec& env, const GridConfig& gc);

struct PDESolution {
  double dx = 0.0;
  double dt = 0.0;
  /// Grid cells per spatial period.
  long cells_per_period = 0;
  std::vector<double> times;
  /// Absolute grid index of the first cell of each stored frame; x = index * dx.
  std::vector<long> window_offsets;
  std::vector<std::vector<double>> frames;

  /// Rightmost crossing of track_level at every frame time (stored or not).
  double track_level = 0.5;
  std::vector<double> track_times;
  std::vector<double> track_positions;
  /// Cumulative invaded mass: integral of (1 - u) to the left of the window's
  /// right edge, counting cells that left the window as fully invaded.
  std::vector<double> invaded_mass;

  /// Largest excursion of u outside [0, 1] that was clamped.
  double max_clamp = 0.0;
  std::size_t recenterings = 0;

  double x_at(std::size_t frame, std::size_t i) const {
    return static_cast<double>(window_offsets[frame] + static_cast<long>(i)) * dx;
  }
  /// u at time t (linear in time between stored frames) and absolute grid
  /// index j; empty when t or j is outside the stored data.
  std::optional<double> value_at(double t, long j) const;
};

/// Binary branching, Brownian motion.
PDESolution solve_fkpp(const EnvironmentSpec& env, double t_end, const GridConfig& gc = {});

/// Drift, volatility and the offspring generating polynomial from `env`.
PDESolution solve_general_fkpp(const EnvironmentSpec& env, double t_end, const GridConfig& gc = {});

/// Same equations from arbitrary initial data on the initial window (values
/// at x_i = (offset + i) dx with offset = -round(left_pad / dx)).
PDESolution solve_general_fkpp_from(const EnvironmentSpec& env, std::span<const double> initial, double t_end,
                                    const GridConfig& gc);

struct FrontTrack {
  double level = 0.5;
  std::vector<double> times;
  std::vector<double> positions;
  double v_hat = 0.0;
  double c_log_hat = 0.0;
  double b_hat = 0.0;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
};

/// Rightmost crossing of u = level in one frame, by linear interpolation.
std::optional<double> rightmost_crossing(std::span<const double> u, double level, double x0, double dx);

/// Rightmost `level` crossing per stored frame and a t-weighted least-squares
/// fit of x(t) = v t - c log t + b over [fit_lo, fit_hi].
FrontTrack track_front(const PDESolution& sol, double level, double fit_lo = 50.0, double fit_hi = 400.0);

/// Fit of x(t) = v t - c log t + b to arbitrary samples (weights t).
void fit_front(FrontTrack& track);

/// sup_x |u(t0 + 1/v, x + 1) - u(t0, x)| over the overlap of both windows.
double pulsating_residual(const PDESolution& sol, double v, double t0);

namespace kernels {

/// Per-phase coefficients of the equation for w = 1 - u:
///   w_t = sigma^2/2 w_xx + mu w_x + g H(w),   H(w) = (1 - w) - G(1 - w),
/// with H(w) = w (h_1 + w (h_2 + ...)) expanded around w = 0 so that small w
/// loses no precision. Binary branching gives H(w) = w (1 - w).
struct FkppCoefficients {
  long cells_per_period = 0;
  std::vector<double> diffusion;  // sigma^2 / (2 dx^2)
  std::vector<double> advection;  // mu / (2 dx)
  std::vector<double> rate;       // g
  /// h_1, h_2, ... per phase (empty for binary branching).
  std::vector<std::vector<double>> reaction;
  bool binary = true;
};

FkppCoefficients make_coefficients(const EnvironmentSpec& env, double dx);

/// Coefficients laid out along a window whose first cell has absolute index offset.
struct WindowCoefficients {
  long offset = 0;
  std::vector<double> diffusion, advection, rate;
  std::vector<std::uint32_t> phase;
};

WindowCoefficients window_coefficients(const FkppCoefficients& c, long offset, std::size_t n);

/// out_i = right-hand side for w at interior cells; boundary entries are set to 0.
void fkpp_rhs(const FkppCoefficients& c, const WindowCoefficients& wc, std::span<const double> w,
              std::span<double> out, Exec exec);

/// One Heun (RK2) step with Dirichlet ends held fixed.
void fkpp_heun_step(const FkppCoefficients& c, const WindowCoefficients& wc, std::vector<double>& w,
                    std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& stage, double dt,
                    Exec exec);

}  // namespace kernels

}  // namespace perbbm
