#include "perbbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace perbbm {

TailFit tail_fit(std::span<const double> samples, double y_min, double y_max, TailModel model, double step) {
  if (samples.size() < kMinTailSamples) throw StatsError("tail fit needs at least 10^4 samples");
  if (!(y_max > y_min) || !(step > 0.0)) throw StatsError("need y_min < y_max and a positive step");
  if (model == TailModel::y_times_exponential && !(y_min > 0.0)) throw StatsError("y model needs y_min > 0");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  TailFit fit;
  fit.model = model;
  fit.samples = sorted.size();
  const auto points = static_cast<std::size_t>(std::floor((y_max - y_min) / step + 1e-9)) + 1;
  for (std::size_t j = 0; j < points; ++j) {
    const double y = y_min + static_cast<double>(j) * step;
    const auto above = static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), y));
    if (above < kMinBinHits) continue;
    fit.y_grid.push_back(y);
    fit.hits.push_back(above);
    fit.log_survival.push_back(std::log(static_cast<double>(above) / n));
  }
  if (fit.y_grid.size() < 3) throw StatsError("insufficient tail mass in [y_min, y_max]");

  // Weighted least squares of r = log survival (minus log y) on y.
  double sw = 0.0, sx = 0.0, sy = 0.0;
  std::vector<double> r(fit.y_grid.size());
  for (std::size_t j = 0; j < r.size(); ++j) {
    r[j] = fit.log_survival[j] - (model == TailModel::y_times_exponential ? std::log(fit.y_grid[j]) : 0.0);
    const double w = static_cast<double>(fit.hits[j]);
    sw += w;
    sx += w * fit.y_grid[j];
    sy += w * r[j];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double w = static_cast<double>(fit.hits[j]);
    const double dx = fit.y_grid[j] - mx, dy = r[j] - my;
    sxx += w * dx * dx;
    sxy += w * dx * dy;
    syy += w * dy * dy;
  }
  const double slope = sxy / sxx;
  fit.lambda_hat = -slope;
  fit.intercept = my - slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

double fractional_distance(double a, double b) {
  const double d = std::abs((a - std::floor(a)) - (b - std::floor(b)));
  return std::min(d, 1.0 - d);
}

SubsequenceSpec subsequence_times(const FrontParams& fp, double p, double t_min, std::size_t count) {
  if (!fp.attained) throw StatsError("front parameters not attained");
  if (!(p >= 0.0 && p < 1.0)) throw StatsError("p must lie in [0, 1)");
  const double threshold = fp.log_coefficient() / fp.speed();
  if (!(t_min >= 2.0) || !(t_min > threshold)) {
    throw StatsError("t_min must be at least 2 and above " + std::to_string(threshold) + " where m_t increases");
  }
  SubsequenceSpec spec;
  spec.p = p;
  const auto m = [&](double t) { return front_position(fp, t); };
  double level = std::floor(m(t_min) - p) + p;
  if (level < m(t_min)) level += 1.0;
  double lo = t_min;
  for (std::size_t i = 0; i < count; ++i, level += 1.0) {
    double hi = std::max(lo, 1.0) * 2.0;
    while (m(hi) < level) hi *= 2.0;
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (m(mid) < level) {
        a = mid;
      } else {
        b = mid;
      }
    }
    const double t = std::abs(m(a) - level) < std::abs(m(b) - level) ? a : b;
    spec.times.push_back(t);
    lo = t;
  }
  return spec;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw StatsError("KS distance needs non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lam < 0.2) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

NuPoint nu_from_samples(std::span<const double> centered, const FrontParams& fp, double psi0, double t, double y) {
  NuPoint pt;
  pt.t = t;
  const double my = front_position(fp, t) + y;
  pt.phase = my - std::floor(my);
  pt.trials = centered.size();
  for (double c : centered) pt.hits += c > y ? 1 : 0;
  const double n = static_cast<double>(pt.trials);
  const double p = static_cast<double>(pt.hits) / n;
  const double scale = psi0 * y * std::exp(-fp.lambda() * y);
  pt.nu_hat = p / scale;
  pt.std_error = std::sqrt(p * (1.0 - p) / n) / scale;
  return pt;
}

std::vector<NuPoint> nu_profile(const EnvironmentSpec& env, const FrontParams& fp, std::span<const double> t_grid,
                                double y, std::size_t trials, std::uint64_t seed, const MaxSampleOptions& opt) {
  if (!(y >= 3.0)) throw StatsError("nu profile needs y >= 3");
  const auto ep = solve_eigenpair(env, fp.lambda());
  const double psi0 = ep.psi(0.0);
  std::vector<NuPoint> out;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    MaxSampleOptions o = opt;
    o.first_trial = opt.first_trial + i * trials;
    const auto c = centered_values(max_samples(env, fp, t_grid[i], trials, seed, o));
    auto pt = nu_from_samples(c, fp, psi0, t_grid[i], y);
    if (pt.hits < 10) throw StatsError("insufficient tail hits for nu at t = " + std::to_string(t_grid[i]));
    out.push_back(pt);
  }
  return out;
}

}  // namespace perbbm
