#include "perbbm/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "perbbm/config.hpp"
#include "perbbm/expr.hpp"

namespace perbbm {

namespace {

constexpr double kNormTol = 1e-12;

}  // namespace

PeriodicFunction::PeriodicFunction(std::vector<double> samples, double period, Interpolation mode)
    : samples_(std::move(samples)), period_(period), mode_(mode) {
  if (!(period_ > 0.0) || !std::isfinite(period_)) throw ConfigError("period must be positive");
  if (samples_.empty()) throw ConfigError("periodic function needs at least one sample");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw ConfigError("periodic function samples must be finite");
  }
  if (mode_ == Interpolation::trigonometric) {
    const std::size_t n = samples_.size();
    const std::size_t kmax = n / 2;
    cos_coef_.assign(kmax + 1, 0.0);
    sin_coef_.assign(kmax + 1, 0.0);
    for (std::size_t k = 0; k <= kmax; ++k) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double arg = 2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
        a += samples_[i] * std::cos(arg);
        b += samples_[i] * std::sin(arg);
      }
      const bool edge = (k == 0) || (n % 2 == 0 && k == kmax);
      const double scale = edge ? 1.0 / static_cast<double>(n) : 2.0 / static_cast<double>(n);
      cos_coef_[k] = a * scale;
      sin_coef_[k] = (edge ? 0.0 : b * scale);
    }
  }
}

PeriodicFunction PeriodicFunction::constant(double value, double period) {
  return from_callable([value](double) { return value; }, period, 1);
}

PeriodicFunction PeriodicFunction::from_expression(std::string_view text, double period, std::size_t n,
                                                   Interpolation mode) {
  std::shared_ptr<const Expr> expr;
  try {
    expr = parse_expression(text);
  } catch (const ExprError& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  return from_callable([expr](double x) { return expr->eval(x); }, period, n, mode);
}

PeriodicFunction PeriodicFunction::from_callable(std::function<double(double)> fn, double period, std::size_t n,
                                                 Interpolation mode) {
  if (n == 0) throw ConfigError("grid must have at least one point");
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = fn(period * static_cast<double>(i) / static_cast<double>(n));
  PeriodicFunction f(std::move(samples), period, mode);
  f.source_ = std::move(fn);
  return f;
}

double PeriodicFunction::reduce(double x) const {
  double r = std::fmod(x, period_);
  if (r < 0.0) {
    r += period_;
    if (r >= period_) r = 0.0;
  }
  return r;
}

double PeriodicFunction::operator()(double x) const {
  if (samples_.size() == 1) return samples_[0];
  const double r = reduce(x);
  return mode_ == Interpolation::linear ? eval_linear(r) : eval_trigonometric(r);
}

double PeriodicFunction::eval_linear(double r) const {
  const std::size_t n = samples_.size();
  const double s = r / period_ * static_cast<double>(n);
  std::size_t i = static_cast<std::size_t>(s);
  if (i >= n) i = n - 1;
  const double w = s - static_cast<double>(i);
  const double a = samples_[i];
  const double b = samples_[(i + 1) % n];
  return a + w * (b - a);
}

double PeriodicFunction::eval_trigonometric(double r) const {
  const double theta = 2.0 * std::numbers::pi * r / period_;
  double v = cos_coef_[0];
  for (std::size_t k = 1; k < cos_coef_.size(); ++k) {
    const double kt = static_cast<double>(k) * theta;
    v += cos_coef_[k] * std::cos(kt) + sin_coef_[k] * std::sin(kt);
  }
  return v;
}

Bounds PeriodicFunction::bounds() const {
  const auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
  Bounds b{*lo, *hi};
  if (mode_ == Interpolation::trigonometric && samples_.size() > 1) {
    // The trigonometric interpolant can overshoot the samples; scan it finely.
    const std::size_t m = 16 * samples_.size();
    for (std::size_t i = 0; i < m; ++i) {
      const double v = eval_trigonometric(period_ * static_cast<double>(i) / static_cast<double>(m));
      b.min = std::min(b.min, v);
      b.max = std::max(b.max, v);
    }
  }
  return b;
}

std::vector<double> PeriodicFunction::grid_values(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = period_ * static_cast<double>(i) / static_cast<double>(n);
    out[i] = source_ ? source_(x) : (*this)(x);
  }
  return out;
}

PeriodicFunction PeriodicFunction::shifted(double shift) const {
  if (source_) {
    auto fn = source_;
    return from_callable([fn, shift](double x) { return fn(x + shift); }, period_, samples_.size(), mode_);
  }
  PeriodicFunction copy = *this;
  const std::size_t n = samples_.size();
  for (std::size_t i = 0; i < n; ++i) {
    copy.samples_[i] = (*this)(period_ * static_cast<double>(i) / static_cast<double>(n) + shift);
  }
  return PeriodicFunction(std::move(copy.samples_), period_, mode_);
}

PeriodicFunction PeriodicFunction::reflected(double sign) const {
  if (source_) {
    auto fn = source_;
    return from_callable([fn, sign](double x) { return sign * fn(-x); }, period_, samples_.size(), mode_);
  }
  const std::size_t n = samples_.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sign * samples_[(n - i) % n];
  return PeriodicFunction(std::move(out), period_, mode_);
}

bool PeriodicFunction::is_constant() const {
  return std::all_of(samples_.begin(), samples_.end(), [&](double v) { return v == samples_[0]; });
}

double eval_periodic(const PeriodicFunction& f, double x) { return f(x); }

Bounds bounds(const PeriodicFunction& f) { return f.bounds(); }

// ---------------------------------------------------------------------------

OffspringLaw::OffspringLaw(std::vector<std::vector<double>> probabilities, double period)
    : probs_(std::move(probabilities)), period_(period) {
  if (probs_.empty()) throw ConfigError("offspring law needs at least one position");
  for (auto& p : probs_) {
    if (p.empty()) throw ConfigError("offspring probability vector is empty");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("offspring probabilities must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTol) {
      throw ConfigError("offspring probability vector is not normalized (sum = " + std::to_string(sum) + ")");
    }
    // Residual mass below the tolerance is folded into the last entry.
    p.back() += 1.0 - sum;
    if (p.back() < 0.0) p.back() = 0.0;
  }
  for (const auto& p : probs_) {
    std::vector<double> c(p.size());
    std::partial_sum(p.begin(), p.end(), c.begin());
    c.back() = 1.0;
    cdf_.push_back(std::move(c));
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double kk = static_cast<double>(k);
      m1 += kk * p[k];
      m2 += kk * kk * p[k];
    }
    rho_.push_back(m1);
    kappa_.push_back(m2);
  }
}

OffspringLaw OffspringLaw::deterministic(unsigned k, double period) {
  std::vector<double> p(k + 1, 0.0);
  p[k] = 1.0;
  return OffspringLaw({p}, period);
}

std::size_t OffspringLaw::cell(double x) const {
  if (probs_.size() == 1) return 0;
  double r = std::fmod(x, period_);
  if (r < 0.0) r += period_;
  auto c = static_cast<std::size_t>(r / period_ * static_cast<double>(probs_.size()));
  return std::min(c, probs_.size() - 1);
}

unsigned OffspringLaw::sample(double x, double u) const { return sample_cell(cell(x), u); }

unsigned OffspringLaw::sample_cell(std::size_t c, double u) const {
  const auto& cdf = cdf_[c];
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<unsigned>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1));
}

double OffspringLaw::generating(std::size_t c, double s) const {
  const auto& p = probs_[c];
  double acc = 0.0;
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * s + p[k];
  return acc;
}

std::size_t OffspringLaw::min_children() const {
  std::size_t best = ~std::size_t{0};
  for (const auto& p : probs_) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] > 0.0) {
        best = std::min(best, k);
        break;
      }
    }
  }
  return best;
}

std::size_t OffspringLaw::max_children() const {
  std::size_t best = 0;
  for (const auto& p : probs_) {
    for (std::size_t k = p.size(); k-- > 0;) {
      if (p[k] > 0.0) {
        best = std::max(best, k);
        break;
      }
    }
  }
  return best;
}

bool OffspringLaw::is_binary() const {
  return std::all_of(probs_.begin(), probs_.end(), [](const auto& p) { return p.size() > 2 && p[2] == 1.0; });
}

// ---------------------------------------------------------------------------

bool EnvironmentSpec::standard_motion() const {
  const bool mu_zero = !mu || (mu->is_constant() && mu->samples()[0] == 0.0);
  const bool sigma_one = !sigma || (sigma->is_constant() && sigma->samples()[0] == 1.0);
  return mu_zero && sigma_one;
}

void EnvironmentSpec::validate(ModelKind kind) const {
  if (!(g.bounds().min > 0.0)) throw ConfigError("branching rate g must be strictly positive");
  if (sigma && !(sigma->bounds().min > 0.0)) throw ConfigError("volatility sigma must be strictly positive");
  if (!offspring) return;
  const std::size_t lowest = offspring->min_children();
  if (kind == ModelKind::continuous && lowest < 2) {
    throw ConfigError("continuous models need zero offspring mass on {0, 1}");
  }
  if (kind == ModelKind::lattice) {
    if (lowest < 1) throw ConfigError("lattice models need zero offspring mass on {0}");
    for (std::size_t c = 0; c < offspring->cells(); ++c) {
      if (!(offspring->rho(c) > 1.0)) throw ConfigError("lattice models need mean offspring rho > 1");
    }
  }
}

EnvironmentSpec reflected_env(const EnvironmentSpec& env) {
  EnvironmentSpec out;
  out.g = env.g.reflected();
  if (env.mu) out.mu = env.mu->reflected(-1.0);
  if (env.sigma) out.sigma = env.sigma->reflected();
  if (env.offspring) {
    const std::size_t k = env.offspring->cells();
    std::vector<std::vector<double>> probs;
    for (std::size_t c = k; c-- > 0;) {
      const auto p = env.offspring->probabilities(c);
      probs.emplace_back(p.begin(), p.end());
    }
    out.offspring = OffspringLaw(std::move(probs), env.offspring->period());
  }
  return out;
}

EnvironmentSpec shifted_env(const EnvironmentSpec& env, double shift) {
  EnvironmentSpec out;
  out.g = env.g.shifted(shift);
  if (env.mu) out.mu = env.mu->shifted(shift);
  if (env.sigma) out.sigma = env.sigma->shifted(shift);
  if (env.offspring) {
    const std::size_t k = env.offspring->cells();
    const double cells = shift / env.offspring->period() * static_cast<double>(k);
    const double whole = std::round(cells);
    if (k > 1 && std::abs(cells - whole) > 1e-9) {
      throw ConfigError("offspring cells cannot be shifted by a fraction of a cell");
    }
    const auto n = static_cast<long>(k);
    const long r = ((static_cast<long>(whole) % n) + n) % n;
    std::vector<std::vector<double>> probs;
    for (long c = 0; c < n; ++c) {
      const auto p = env.offspring->probabilities(static_cast<std::size_t>((c + r) % n));
      probs.emplace_back(p.begin(), p.end());
    }
    out.offspring = OffspringLaw(std::move(probs), env.offspring->period());
  }
  return out;
}

EnvironmentSpec parse_env(std::string_view config_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  return parse_env_json(doc);
}

}  // namespace perbbm
