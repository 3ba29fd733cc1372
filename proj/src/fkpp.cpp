#include "perbbm/fkpp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace perbbm {

namespace kernels {

FkppCoefficients make_coefficients(const EnvironmentSpec& env, double dx) {
  const double period = env.period();
  const double m_real = period / dx;
  const long m = std::lround(m_real);
  if (m < 1 || std::abs(m_real - static_cast<double>(m)) > 1e-9 * std::max(1.0, m_real)) {
    std::ostringstream os;
    os << "dx = " << dx << " does not divide the period " << period << " (need dx = period / m)";
    throw PdeError(os.str());
  }
  FkppCoefficients c;
  c.cells_per_period = m;
  const auto n = static_cast<std::size_t>(m);
  const auto g = env.g.grid_values(n);
  const auto mu = env.mu ? env.mu->grid_values(n) : std::vector<double>(n, 0.0);
  const auto sigma = env.sigma ? env.sigma->grid_values(n) : std::vector<double>(n, 1.0);
  c.diffusion.resize(n);
  c.advection.resize(n);
  c.rate = g;
  for (std::size_t i = 0; i < n; ++i) {
    c.diffusion[i] = 0.5 * sigma[i] * sigma[i] / (dx * dx);
    c.advection[i] = mu[i] / (2.0 * dx);
  }
  c.binary = env.binary_offspring();
  if (!c.binary) {
    // G(1 - w) = sum_j c_j w^j with c_j = (-1)^j sum_k pi_k binom(k, j); c_0 = 1 and
    // c_1 = -rho, so H(w) = (rho - 1) w - sum_{j >= 2} c_j w^j.
    c.reaction.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) * period / static_cast<double>(n);
      const auto p = env.offspring->probabilities(env.offspring->cell(x));
      std::vector<double> h(p.size() > 1 ? p.size() - 1 : 1, 0.0);
      for (std::size_t j = 1; j < p.size(); ++j) {
        double cj = 0.0;
        for (std::size_t k = j; k < p.size(); ++k) {
          double binom = 1.0;
          for (std::size_t r = 0; r < j; ++r) binom = binom * static_cast<double>(k - r) / static_cast<double>(r + 1);
          cj += p[k] * binom;
        }
        if (j % 2 == 1) cj = -cj;
        h[j - 1] = j == 1 ? -cj - 1.0 : -cj;
      }
      c.reaction[i] = std::move(h);
    }
  }
  return c;
}

WindowCoefficients window_coefficients(const FkppCoefficients& c, long offset, std::size_t n) {
  WindowCoefficients wc;
  wc.offset = offset;
  wc.diffusion.resize(n);
  wc.advection.resize(n);
  wc.rate.resize(n);
  wc.phase.resize(n);
  const long m = c.cells_per_period;
  long ph = offset % m;
  if (ph < 0) ph += m;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = static_cast<std::size_t>(ph);
    wc.diffusion[i] = c.diffusion[p];
    wc.advection[i] = c.advection[p];
    wc.rate[i] = c.rate[p];
    wc.phase[i] = static_cast<std::uint32_t>(p);
    if (++ph == m) ph = 0;
  }
  return wc;
}

namespace {

inline double general_reaction(const std::vector<double>& h, double w) {
  double s = 0.0;
  for (std::size_t k = h.size(); k-- > 0;) s = s * w + h[k];
  return s * w;
}

template <bool Binary>
inline void rhs_range(const FkppCoefficients& c, const WindowCoefficients& wc, const double* w, double* out,
                      std::ptrdiff_t i) {
  const double wm = w[i - 1], w0 = w[i], wp = w[i + 1];
  const double react = Binary ? w0 * (1.0 - w0) : general_reaction(c.reaction[wc.phase[i]], w0);
  out[i] = wc.diffusion[i] * (wm - 2.0 * w0 + wp) + wc.advection[i] * (wp - wm) + wc.rate[i] * react;
}

template <bool Binary>
void rhs_loop(const FkppCoefficients& c, const WindowCoefficients& wc, const double* w, double* out,
              std::ptrdiff_t last, Exec exec) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 1; i < last; ++i) rhs_range<Binary>(c, wc, w, out, i);
  } else {
    for (std::ptrdiff_t i = 1; i < last; ++i) rhs_range<Binary>(c, wc, w, out, i);
  }
}

}  // namespace

void fkpp_rhs(const FkppCoefficients& c, const WindowCoefficients& wc, std::span<const double> w,
              std::span<double> out, Exec exec) {
  const std::size_t n = w.size();
  if (n < 3) throw PdeError("window needs at least three cells");
  const auto last = static_cast<std::ptrdiff_t>(n - 1);
  if (c.binary) {
    rhs_loop<true>(c, wc, w.data(), out.data(), last, exec);
  } else {
    rhs_loop<false>(c, wc, w.data(), out.data(), last, exec);
  }
  out[0] = 0.0;
  out[n - 1] = 0.0;
}

void fkpp_heun_step(const FkppCoefficients& c, const WindowCoefficients& wc, std::vector<double>& w,
                    std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& stage, double dt,
                    Exec exec) {
  const std::size_t n = w.size();
  fkpp_rhs(c, wc, w, k1, exec);
  for (std::size_t i = 0; i < n; ++i) stage[i] = w[i] + dt * k1[i];
  fkpp_rhs(c, wc, stage, k2, exec);
  for (std::size_t i = 0; i < n; ++i) w[i] += 0.5 * dt * (k1[i] + k2[i]);
}

}  // namespace kernels

double stable_dt(const EnvironmentSpec& env, const GridConfig& gc) {
  const double smax = env.sigma ? env.sigma->bounds().max : 1.0;
  return gc.safety * gc.dx * gc.dx / (2.0 * smax * smax);
}

std::optional<double> PDESolution::value_at(double t, long j) const {
  if (times.empty() || t < times.front() - 1e-12 || t > times.back() + 1e-12) return std::nullopt;
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
  std::size_t k1 = static_cast<std::size_t>(it - times.begin());
  if (k1 >= times.size()) k1 = times.size() - 1;
  std::size_t k0 = k1;
  if (std::abs(times[k1] - t) > 1e-12 && k1 > 0) k0 = k1 - 1;
  auto pick = [&](std::size_t k) -> std::optional<double> {
    const long i = j - window_offsets[k];
    if (i < 0 || i >= static_cast<long>(frames[k].size())) return std::nullopt;
    return frames[k][static_cast<std::size_t>(i)];
  };
  const auto a = pick(k0);
  if (k0 == k1) return a;
  const auto b = pick(k1);
  if (!a || !b) return std::nullopt;
  const double w = (t - times[k0]) / (times[k1] - times[k0]);
  return (1.0 - w) * *a + w * *b;
}

std::optional<double> rightmost_crossing(std::span<const double> u, double level, double x0, double dx) {
  for (std::size_t i = u.size() - 1; i-- > 0;) {
    if (u[i] < level && u[i + 1] >= level) {
      const double frac = (level - u[i]) / (u[i + 1] - u[i]);
      return x0 + (static_cast<double>(i) + frac) * dx;
    }
  }
  return std::nullopt;
}

namespace {

void check_grid(const EnvironmentSpec& env, const GridConfig& gc, double t_end) {
  if (!(t_end >= 0.0)) throw PdeError("t_end must be non-negative");
  if (!(gc.dx > 0.0)) throw PdeError("dx must be positive");
  if (gc.window_width < 40.0) throw PdeError("window_width must be at least 40");
  if (!(gc.left_pad > 0.0 && gc.left_pad < gc.window_width)) throw PdeError("left_pad must lie inside the window");
  if (!(gc.frame_interval > 0.0)) throw PdeError("frame_interval must be positive");
  const double bound = stable_dt(env, gc);
  if (gc.dt > bound) {
    std::ostringstream os;
    os.precision(17);
    os << "stability violation: dt = " << gc.dt << " exceeds the bound " << bound;
    throw PdeError(os.str());
  }
}

}  // namespace

PDESolution solve_general_fkpp_from(const EnvironmentSpec& env, std::span<const double> initial, double t_end,
                                    const GridConfig& gc) {
  check_grid(env, gc, t_end);
  const auto coef = kernels::make_coefficients(env, gc.dx);
  const auto n = static_cast<std::size_t>(std::lround(gc.window_width / gc.dx)) + 1;
  if (initial.size() != n) throw PdeError("initial data does not match the window size");

  const double bound = stable_dt(env, gc);
  long spf = 0;
  double dt = gc.dt;
  if (dt > 0.0) {
    spf = std::max(1L, std::lround(gc.frame_interval / dt));
  } else {
    spf = std::max(1L, static_cast<long>(std::ceil(gc.frame_interval / bound - 1e-9)));
    dt = gc.frame_interval / static_cast<double>(spf);
  }
  const double frame_dt = static_cast<double>(spf) * dt;

  PDESolution sol;
  sol.dx = gc.dx;
  sol.dt = dt;
  sol.cells_per_period = coef.cells_per_period;
  sol.track_level = gc.track_level;

  std::vector<double> w(n), k1(n), k2(n), stage(n), frame(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 - initial[i];
  long offset = -std::lround(gc.left_pad / gc.dx);
  auto wc = kernels::window_coefficients(coef, offset, n);
  const long anchor = std::lround(gc.left_pad / gc.dx);
  const long band = std::max(1L, std::lround(gc.recenter_band / gc.dx));
  const double left_value = w.front();
  const double right_value = w.back();
  double shifted_mass = 0.0;

  // Rightmost i with u_i < 1/2 <= u_{i+1}, in terms of w.
  auto front_index = [&]() -> long {
    for (std::size_t i = n - 1; i-- > 0;) {
      if (w[i] > 0.5 && w[i + 1] <= 0.5) return static_cast<long>(i);
    }
    return -1;
  };

  auto record = [&](double t) {
    double mass = shifted_mass;
    for (double v : w) mass += v * gc.dx;
    sol.invaded_mass.push_back(mass);
    for (std::size_t i = 0; i < n; ++i) frame[i] = 1.0 - w[i];
    sol.track_times.push_back(t);
    const auto x = rightmost_crossing(frame, gc.track_level, static_cast<double>(offset) * gc.dx, gc.dx);
    sol.track_positions.push_back(x ? *x : std::nan(""));
    if (t >= gc.keep_frames_from - 1e-12) {
      sol.times.push_back(t);
      sol.window_offsets.push_back(offset);
      sol.frames.push_back(frame);
    }
  };

  auto recenter = [&] {
    const long idx = front_index();
    if (idx < 0) {
      const bool flat = std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); });
      if (!flat && left_value != right_value) throw PdeError("front exits window");
      return;
    }
    if (idx - anchor <= band && anchor - idx <= band) return;
    const long shift = idx - anchor;  // > 0 moves the window right
    const long nn = static_cast<long>(n);
    if (std::abs(shift) >= nn) throw PdeError("front exits window");
    if (shift > 0) {
      for (long i = 0; i < shift; ++i) shifted_mass += w[static_cast<std::size_t>(i)] * gc.dx;
      std::move(w.begin() + shift, w.end(), w.begin());
      std::fill(w.end() - shift, w.end(), right_value);
    } else {
      const long s = -shift;
      for (long i = nn - s; i < nn; ++i) shifted_mass -= w[static_cast<std::size_t>(i)] * gc.dx;
      std::move_backward(w.begin(), w.end() - s, w.end());
      std::fill(w.begin(), w.begin() + s, left_value);
    }
    offset += shift;
    wc = kernels::window_coefficients(coef, offset, n);
    ++sol.recenterings;
  };

  const long frames_total = static_cast<long>(std::floor(t_end / frame_dt + 1e-9));
  record(0.0);
  for (long f = 1; f <= frames_total; ++f) {
    for (long s = 0; s < spf; ++s) {
      kernels::fkpp_heun_step(coef, wc, w, k1, k2, stage, dt, gc.exec);
      w.front() = left_value;
      w.back() = right_value;
    }
    for (double& v : w) {
      if (v < 0.0 || v > 1.0) {
        const double excess = v < 0.0 ? -v : v - 1.0;
        if (excess > 1e-10) sol.max_clamp = std::max(sol.max_clamp, excess);
        v = std::clamp(v, 0.0, 1.0);
      }
    }
    recenter();
    record(static_cast<double>(f) * frame_dt);
  }
  return sol;
}

PDESolution solve_general_fkpp(const EnvironmentSpec& env, double t_end, const GridConfig& gc) {
  const auto n = static_cast<std::size_t>(std::lround(gc.window_width / gc.dx)) + 1;
  const long offset = -std::lround(gc.left_pad / gc.dx);
  std::vector<double> u0(n);
  for (std::size_t i = 0; i < n; ++i) u0[i] = (offset + static_cast<long>(i)) >= 0 ? 1.0 : 0.0;
  return solve_general_fkpp_from(env, u0, t_end, gc);
}

PDESolution solve_fkpp(const EnvironmentSpec& env, double t_end, const GridConfig& gc) {
  EnvironmentSpec bbm;
  bbm.g = env.g;
  return solve_general_fkpp(bbm, t_end, gc);
}

void fit_front(FrontTrack& track) {
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < track.times.size(); ++i) {
    const double t = track.times[i];
    if (t >= track.fit_lo - 1e-12 && t <= track.fit_hi + 1e-12 && t > 0.0 && std::isfinite(track.positions[i])) {
      use.push_back(i);
    }
  }
  if (use.size() < 3) throw PdeError("fit range outside solution");
  Eigen::MatrixXd a(use.size(), 3);
  Eigen::VectorXd b(use.size());
  for (std::size_t r = 0; r < use.size(); ++r) {
    const double t = track.times[use[r]];
    const double w = std::sqrt(t);
    a(r, 0) = w * t;
    a(r, 1) = -w * std::log(t);
    a(r, 2) = w;
    b(r) = w * track.positions[use[r]];
  }
  const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
  track.v_hat = coef(0);
  track.c_log_hat = coef(1);
  track.b_hat = coef(2);
}

FrontTrack track_front(const PDESolution& sol, double level, double fit_lo, double fit_hi) {
  if (!(level >= 0.1 && level <= 0.9)) throw PdeError("level must lie in [0.1, 0.9]");
  // The recorded track covers every frame time; other levels need stored frames.
  const bool recorded = level == sol.track_level && !sol.track_times.empty();
  const auto& times = recorded ? sol.track_times : sol.times;
  if (times.empty() || fit_lo > times.back() + 1e-9 || fit_hi > times.back() + 1e-9 ||
      fit_lo < times.front() - 1e-9 || !(fit_hi > fit_lo)) {
    throw PdeError("fit range outside solution");
  }
  FrontTrack tr;
  tr.level = level;
  tr.fit_lo = fit_lo;
  tr.fit_hi = fit_hi;
  if (recorded) {
    tr.times = sol.track_times;
    tr.positions = sol.track_positions;
    fit_front(tr);
    return tr;
  }
  for (std::size_t k = 0; k < sol.frames.size(); ++k) {
    const auto x = rightmost_crossing(sol.frames[k], level, sol.x_at(k, 0), sol.dx);
    if (!x) throw PdeError("level never crossed");
    tr.times.push_back(sol.times[k]);
    tr.positions.push_back(*x);
  }
  fit_front(tr);
  return tr;
}

double pulsating_residual(const PDESolution& sol, double v, double t0) {
  if (!(v > 0.0)) throw PdeError("speed must be positive");
  const double t1 = t0 + 1.0 / v;
  if (sol.times.empty() || t0 < sol.times.front() - 1e-12 || t1 > sol.times.back() + 1e-12) {
    throw PdeError("pulsating check outside the solved time range");
  }
  // Absolute index range covered by the frames that bracket t0.
  auto it = std::lower_bound(sol.times.begin(), sol.times.end(), t0 - 1e-12);
  const auto k = static_cast<std::size_t>(it - sol.times.begin());
  const long lo = sol.window_offsets[k] - 2 * static_cast<long>(sol.frames[k].size());
  const long hi = sol.window_offsets[k] + 2 * static_cast<long>(sol.frames[k].size());
  double sup = 0.0;
  bool any = false;
  for (long j = lo; j <= hi; ++j) {
    const auto a = sol.value_at(t0, j);
    const auto b = sol.value_at(t1, j + sol.cells_per_period);
    if (!a || !b) continue;
    any = true;
    sup = std::max(sup, std::abs(*b - *a));
  }
  if (!any) throw PdeError("windows at the two times do not overlap");
  return sup;
}

}  // namespace perbbm
