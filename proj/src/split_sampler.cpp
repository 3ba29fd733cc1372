#include "perbbm/split_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "perbbm/fkpp.hpp"

namespace perbbm {

namespace {

constexpr std::uint64_t kLevelTag = 0x9E3779B97F4A7C15ull;

}  // namespace

MaxLawTable::MaxLawTable(const EnvironmentSpec& env, double tau, double dx, Exec exec) : tau_(tau), dx_(dx) {
  env.validate(ModelKind::continuous);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const double m = env.period() / dx;
  if (!(dx > 0.0) || std::abs(m - std::round(m)) > 1e-9 * m) {
    throw std::invalid_argument("dx must be period / m for an integer m");
  }
  cells_ = std::lround(m);
  offsets_.resize(static_cast<std::size_t>(cells_));
  frames_.resize(static_cast<std::size_t>(cells_));
  const auto mirrored = reflected_env(env);

  GridConfig gc;
  gc.dx = dx;
  gc.frame_interval = tau / std::ceil(tau / 0.25 - 1e-9);
  gc.keep_frames_from = tau;
  gc.exec = Exec::serial;
  // Phase p: x = k period + p dx, and Z = x - X sees the medium y -> f(p dx - y).
  for_each_index(static_cast<std::size_t>(cells_), exec, [&](std::size_t p) {
    const auto phase_env = shifted_env(mirrored, -static_cast<double>(p) * dx);
    auto sol = solve_general_fkpp(phase_env, tau, gc);
    if (sol.frames.empty() || std::abs(sol.times.back() - tau) > 1e-9) {
      throw PdeError("final frame missing from the max-law solution");
    }
    offsets_[p] = sol.window_offsets.back();
    frames_[p] = std::move(sol.frames.back());
  });
}

double MaxLawTable::cdf(double y, long q) const {
  const auto p = static_cast<std::size_t>(((q % cells_) + cells_) % cells_);
  const auto& u = frames_[p];
  // Grid coordinate of z = x - y relative to the stored window.
  const double r = static_cast<double>(q - offsets_[p]) - y / dx_;
  if (r < 0.0) return 0.0;
  const double j = std::floor(r);
  const auto i = static_cast<std::size_t>(j);
  if (i + 1 >= u.size()) return 1.0;
  const double w = r - j;
  return (1.0 - w) * u[i] + w * u[i + 1];
}

double sample_conditional_max(const MaxLawTable& law, std::span<const double> positions, double u) {
  if (positions.empty()) throw std::invalid_argument("no particles to condition on");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  const double target = std::log(u);
  const auto log_cdf = [&](long q) {
    double s = 0.0;
    for (double y : positions) {
      const double f = law.cdf(y, q);
      if (f <= 0.0) return -std::numeric_limits<double>::infinity();
      s += std::log(f);
    }
    return s;
  };
  const double top = *std::max_element(positions.begin(), positions.end());
  long lo = std::lround(std::floor(top / law.dx()));
  long hi = lo;
  double l_lo = log_cdf(lo), l_hi = l_lo;
  for (long step = law.cells_per_period(); l_lo >= target; step *= 2) {
    hi = lo;
    l_hi = l_lo;
    lo -= step;
    l_lo = log_cdf(lo);
  }
  for (long step = law.cells_per_period(); l_hi < target; step *= 2) {
    lo = hi;
    l_lo = l_hi;
    hi += step;
    l_hi = log_cdf(hi);
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    const double l_mid = log_cdf(mid);
    if (l_mid < target) {
      lo = mid;
      l_lo = l_mid;
    } else {
      hi = mid;
      l_hi = l_mid;
    }
  }
  const double g_lo = std::exp(l_lo), g_hi = std::exp(l_hi);
  const double frac = g_hi > g_lo ? std::clamp((u - g_lo) / (g_hi - g_lo), 0.0, 1.0) : 1.0;
  return (static_cast<double>(lo) + frac) * law.dx();
}

std::vector<MaxRecord> split_max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t,
                                         std::size_t trials, std::uint64_t seed, const SplitSampleOptions& opt) {
  if (!(opt.split_time > 0.0 && opt.split_time < t)) throw std::invalid_argument("split time must lie in (0, t)");
  const MaxLawTable law(env, t - opt.split_time, opt.dx, opt.exec);
  return split_max_samples(env, fp, t, trials, seed, law, opt);
}

std::vector<MaxRecord> split_max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t,
                                         std::size_t trials, std::uint64_t seed, const MaxLawTable& law,
                                         const SplitSampleOptions& opt) {
  if (!(opt.split_time > 0.0 && opt.split_time < t)) throw std::invalid_argument("split time must lie in (0, t)");
  if (std::abs(t - opt.split_time - law.tau()) > 1e-9 * std::max(1.0, t)) {
    throw std::invalid_argument("table horizon does not match t - split_time");
  }
  PruneConfig off;
  off.enabled = false;
  off.hard_cap = opt.hard_cap;
  const double m_t = front_position(fp, t);
  std::vector<MaxRecord> out(trials);
  for_each_index(trials, opt.exec, [&](std::size_t k) {
    const std::uint64_t trial = opt.first_trial + k;
    const auto snap = simulate_bbm(env, opt.split_time, opt.dt, off, rng::trial_stream(seed, trial), opt.x0);
    std::vector<double> y;
    y.reserve(snap.particles.size());
    for (const auto& p : snap.particles) y.push_back(p.position);
    const double u = rng::trial_stream(seed, trial, kLevelTag).uniform();
    const double mx = sample_conditional_max(law, y, u);
    out[k] = {mx, mx - m_t, 0, snap.peak_population};
  });
  return out;
}

}  // namespace perbbm
