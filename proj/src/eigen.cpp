#include "perbbm/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

namespace perbbm {

void PeriodicTridiagonal::apply(std::span<const double> v, std::span<double> out) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    const double left = v[i == 0 ? n - 1 : i - 1];
    const double right = v[i + 1 == n ? 0 : i + 1];
    out[i] = lower[i] * (left - v[i]) + upper[i] * (right - v[i]) + row_sum[i] * v[i];
  }
}

Eigen::MatrixXd PeriodicTridiagonal::to_dense() const {
  const std::size_t n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    m(r, r) += diag(i);
    m(r, static_cast<Eigen::Index>(i == 0 ? n - 1 : i - 1)) += lower[i];
    m(r, static_cast<Eigen::Index>(i + 1 == n ? 0 : i + 1)) += upper[i];
  }
  return m;
}

PeriodicTridiagonal assemble_generator(const EnvironmentSpec& env, double lambda, std::size_t n_grid) {
  if (n_grid < kMinGrid) throw SolverError("n_grid must be at least " + std::to_string(kMinGrid));
  const double period = env.period();
  const double h = period / static_cast<double>(n_grid);
  const auto g = env.g.grid_values(n_grid);
  const auto mu = env.mu ? env.mu->grid_values(n_grid) : std::vector<double>(n_grid, 0.0);
  const auto sigma = env.sigma ? env.sigma->grid_values(n_grid) : std::vector<double>(n_grid, 1.0);

  PeriodicTridiagonal op;
  op.period = period;
  op.lower.resize(n_grid);
  op.upper.resize(n_grid);
  op.row_sum.resize(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i) {
    const double x = period * static_cast<double>(i) / static_cast<double>(n_grid);
    const double s2 = sigma[i] * sigma[i];
    const double rho = env.rho_at(x);
    const double diffusion = 0.5 * s2 / (h * h);
    const double advection = (mu[i] + lambda * s2) / (2.0 * h);
    op.lower[i] = diffusion - advection;
    op.upper[i] = diffusion + advection;
    op.row_sum[i] = lambda * mu[i] + 0.5 * lambda * lambda * s2 + (rho - 1.0) * g[i];
  }
  return op;
}

namespace {

// Solves the cyclic tridiagonal system M z = r with
// M = shift I - A (A given by `op`), via Sherman-Morrison on top of Thomas.
class ShiftedCyclicSolver {
 public:
  ShiftedCyclicSolver(const PeriodicTridiagonal& op, double shift) : n_(op.size()) {
    sub_.resize(n_);
    diag_.resize(n_);
    sup_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      sub_[i] = -op.lower[i];
      sup_[i] = -op.upper[i];
      diag_[i] = op.lower[i] + op.upper[i] + (shift - op.row_sum[i]);
    }
    corner_top_ = sub_[0];         // M(0, n-1)
    corner_bottom_ = sup_[n_ - 1];  // M(n-1, 0)
    gamma_ = -diag_[0];
    diag_[0] -= gamma_;
    diag_[n_ - 1] -= corner_bottom_ * corner_top_ / gamma_;
    factor();
    std::vector<double> u(n_, 0.0);
    u[0] = gamma_;
    u[n_ - 1] = corner_bottom_;
    z_ = thomas(u);
  }

  std::vector<double> solve(const std::vector<double>& r) const {
    std::vector<double> x = thomas(r);
    const double num = x[0] + corner_top_ * x[n_ - 1] / gamma_;
    const double den = 1.0 + z_[0] + corner_top_ * z_[n_ - 1] / gamma_;
    const double fact = num / den;
    for (std::size_t i = 0; i < n_; ++i) x[i] -= fact * z_[i];
    return x;
  }

 private:
  void factor() {
    cprime_.resize(n_);
    denom_.resize(n_);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = diag_[i] - (i == 0 ? 0.0 : sub_[i] * prev);
      denom_[i] = d;
      prev = (i + 1 < n_) ? sup_[i] / d : 0.0;
      cprime_[i] = prev;
    }
  }

  std::vector<double> thomas(const std::vector<double>& r) const {
    std::vector<double> x(n_);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      prev = (r[i] - (i == 0 ? 0.0 : sub_[i] * prev)) / denom_[i];
      x[i] = prev;
    }
    for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= cprime_[i] * x[i + 1];
    return x;
  }

  std::size_t n_;
  std::vector<double> sub_, diag_, sup_, cprime_, denom_, z_;
  double corner_top_ = 0.0, corner_bottom_ = 0.0, gamma_ = 0.0;
};

PeriodicFunction normalized_psi(std::vector<double> v, double period) {
  const double h = period / static_cast<double>(v.size());
  double integral = 0.0;
  for (double x : v) integral += x;
  integral *= h;
  for (double& x : v) x /= integral;
  return PeriodicFunction(std::move(v), period);
}

}  // namespace

EigenPair principal_eigenpair(const PeriodicTridiagonal& op, double lambda, double tolerance) {
  const std::size_t n = op.size();
  if (n < 3) return principal_eigenpair(op.to_dense(), lambda, op.period);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(op.lower[i] > 0.0) || !(op.upper[i] > 0.0)) {
      throw SolverError("generator has non-positive off-diagonal entries; refine the grid for lambda = " +
                        std::to_string(lambda));
    }
  }

  std::vector<double> x(n, 1.0), ax(n);
  double lo = 0.0, hi = 0.0;
  double best_width = std::numeric_limits<double>::infinity();
  int stalled = 0;
  constexpr int kMaxIterations = 200;
  for (int it = 0;; ++it) {
    op.apply(x, ax);
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ax[i] / x[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double width = hi - lo;
    if (width <= tolerance * std::max(1.0, std::abs(hi))) break;
    if (width < 0.5 * best_width) {
      best_width = width;
      stalled = 0;
    } else if (++stalled >= 3) {
      break;
    }
    if (it >= kMaxIterations) throw SolverError("principal eigenpair iteration did not converge");

    const ShiftedCyclicSolver solver(op, hi);
    std::vector<double> z = solver.solve(x);
    double zmax = 0.0;
    for (double v : z) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw SolverError("Perron iteration lost positivity (non-principal mode selected)");
      }
      zmax = std::max(zmax, v);
    }
    for (std::size_t i = 0; i < n; ++i) x[i] = z[i] / zmax;
  }

  EigenPair ep;
  ep.lambda = lambda;
  ep.gamma = 0.5 * (lo + hi);
  ep.bracket_width = hi - lo;
  double res = 0.0, xmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res = std::max(res, std::abs(ax[i] - ep.gamma * x[i]));
    xmax = std::max(xmax, std::abs(x[i]));
  }
  ep.residual_norm = res / xmax;
  ep.psi = normalized_psi(std::move(x), op.period);
  return ep;
}

EigenPair principal_eigenpair(const Eigen::MatrixXd& matrix, double lambda, double period, double tolerance) {
  const Eigen::Index n = matrix.rows();
  if (n == 0 || matrix.cols() != n) throw SolverError("matrix must be square and non-empty");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, true);
  if (solver.info() != Eigen::Success) throw SolverError("dense eigendecomposition failed");
  const auto& values = solver.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (values[i].real() > values[best].real()) best = i;
  }
  Eigen::VectorXd v = solver.eigenvectors().col(best).real();
  if (v.sum() < 0.0) v = -v;
  const double scale = v.cwiseAbs().maxCoeff();
  if (v.minCoeff() < -tolerance * scale) throw SolverError("principal eigenvector has mixed signs");
  std::vector<double> psi(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) psi[static_cast<std::size_t>(i)] = std::max(v[i], 0.0);

  EigenPair ep;
  ep.lambda = lambda;
  ep.gamma = values[best].real();
  ep.residual_norm = (matrix * v - ep.gamma * v).cwiseAbs().maxCoeff() / scale;
  ep.psi = normalized_psi(std::move(psi), period);
  return ep;
}

EigenPair solve_eigenpair(const EnvironmentSpec& env, double lambda, std::size_t n_grid) {
  return principal_eigenpair(assemble_generator(env, lambda, n_grid), lambda);
}

std::vector<GammaPoint> gamma_curve(const EnvironmentSpec& env, std::span<const double> lambdas,
                                    std::size_t n_grid) {
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw SolverError("lambda grid must be ascending");
  std::vector<GammaPoint> out;
  out.reserve(lambdas.size());
  for (double l : lambdas) {
    const EigenPair ep = solve_eigenpair(env, l, n_grid);
    out.push_back({l, ep.gamma, ep.residual_norm});
  }
  return out;
}

// ---------------------------------------------------------------------------

double FrontParams::lambda() const {
  if (!attained || !lambda_star) throw SolverError("minimizer not attained");
  return *lambda_star;
}

double FrontParams::speed() const {
  if (!attained || !v_star) throw SolverError("minimizer not attained");
  return *v_star;
}

double FrontParams::log_coefficient() const {
  if (!attained || !log_coeff) throw SolverError("minimizer not attained");
  return *log_coeff;
}

FrontParams minimize_speed(const std::function<double(double)>& gamma, double tol, double lambda_max) {
  const auto ratio = [&](double l) {
    const double v = gamma(l) / l;
    if (!std::isfinite(v)) throw SolverError("gamma(lambda)/lambda not evaluable at lambda = " + std::to_string(l));
    return v;
  };
  const auto rises = [](double from, double to) {
    return to > from + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(from);
  };

  double a = 0.0, b = 1.0, c = 2.0;
  double fa = 0.0, fb = ratio(b), fc = ratio(c);
  if (rises(fb, fc)) {
    // Minimum lies below 2: halve until the left end rises too.
    a = 0.5;
    fa = ratio(a);
    while (!rises(fb, fa)) {
      c = b;
      fc = fb;
      b = a;
      fb = fa;
      a *= 0.5;
      if (a < 1e-12) throw SolverError("gamma(lambda)/lambda keeps decreasing towards lambda = 0");
      fa = ratio(a);
    }
  } else {
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    for (;;) {
      if (b >= lambda_max) return FrontParams{};  // strictly decreasing up to the ceiling
      c = std::min(2.0 * b, lambda_max);
      fc = ratio(c);
      if (rises(fb, fc)) break;
      a = b;
      fa = fb;
      b = c;
      fb = fc;
    }
  }

  // Golden section on [a, c] with interior point b.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = a, hi = c;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = ratio(x1), f2 = ratio(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = ratio(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = ratio(x2);
    }
  }
  double ls = f1 < f2 ? x1 : x2;

  // The ratio is flat to rounding within ~1e-8 of the minimum. Refine on the
  // stationarity condition lambda gamma'(lambda) = gamma(lambda), which is
  // increasing in lambda and crosses zero with slope lambda gamma''.
  const auto stationarity = [&](double l) {
    const double h = 1e-4 * std::max(1.0, l);
    return l * (gamma(l + h) - gamma(l - h)) / (2.0 * h) - gamma(l);
  };
  {
    // Widen until the root is bracketed; the golden-section point can be off
    // by more than 1e-6 on coarse grids.
    double d = std::max(1e-6, 10.0 * tol) * std::max(1.0, ls);
    double xa = ls - d, xb = ls + d;
    double sa = stationarity(xa), sb = stationarity(xb);
    for (int widen = 0; widen < 3 && xa > 0.0 && !(sa < 0.0 && sb > 0.0); ++widen) {
      d *= 10.0;
      xa = ls - d, xb = ls + d;
      sa = stationarity(xa), sb = stationarity(xb);
    }
    if (xa > 0.0 && sa < 0.0 && sb > 0.0) {
      int side = 0;
      for (int it = 0; it < 12; ++it) {
        const double xc = xb - sb * (xb - xa) / (sb - sa);
        if (!(xc > xa && xc < xb)) break;
        const double sc = stationarity(xc);
        ls = xc;
        if (sc == 0.0 || xb - xa < 1e-12 * std::max(1.0, ls)) break;
        // Illinois step: halve the stale endpoint value.
        if (sc < 0.0) {
          xa = xc, sa = sc;
          if (side == -1) sb *= 0.5;
          side = -1;
        } else {
          xb = xc, sb = sc;
          if (side == 1) sa *= 0.5;
          side = 1;
        }
      }
    }
  }

  FrontParams fp;
  fp.attained = true;
  fp.lambda_star = ls;
  fp.gamma_star = gamma(ls);
  fp.v_star = *fp.gamma_star / ls;
  fp.log_coeff = 3.0 / (2.0 * ls);
  constexpr double kStep = 1e-4;
  const double slope = (gamma(ls + kStep) - gamma(ls - kStep)) / (2.0 * kStep);
  fp.stationarity_gap = std::abs(slope - *fp.v_star);
  return fp;
}

FrontParams find_front_params(const EnvironmentSpec& env, double tol, std::size_t n_grid) {
  return minimize_speed([&](double l) { return solve_eigenpair(env, l, n_grid).gamma; }, tol);
}

double front_position(const FrontParams& fp, double t) {
  if (!(t >= 1.0)) throw SolverError("front position needs t >= 1");
  return fp.speed() * t - fp.log_coefficient() * std::log(t);
}

double front_slope(const FrontParams& fp, double t) { return front_position(fp, t) / t; }

TiltDrift tilt_drift(const EigenPair& ep, const EnvironmentSpec& env) {
  const auto& psi = ep.psi.samples();
  const std::size_t n = psi.size();
  if (n < kMinGrid) throw SolverError("eigenfunction grid too small for the tilt drift");
  const double period = ep.psi.period();
  const double h = period / static_cast<double>(n);
  std::vector<double> log_psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(psi[i] > 1e-300)) throw SolverError("eigenfunction vanishes; tilt drift undefined");
    log_psi[i] = std::log(psi[i]);
  }
  std::vector<double> phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = ep.lambda + (log_psi[(i + 1) % n] - log_psi[(i + n - 1) % n]) / (2.0 * h);
  }
  const auto g = env.g.grid_values(n);
  const auto mu = env.mu ? env.mu->grid_values(n) : std::vector<double>(n, 0.0);
  const auto sigma = env.sigma ? env.sigma->grid_values(n) : std::vector<double>(n, 1.0);
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = period * static_cast<double>(i) / static_cast<double>(n);
    const double phi_x = (phi[(i + 1) % n] - phi[(i + n - 1) % n]) / (2.0 * h);
    const double s2 = sigma[i] * sigma[i];
    const double lhs = 0.5 * s2 * (phi_x + phi[i] * phi[i]) + mu[i] * phi[i];
    const double rhs = ep.gamma - (env.rho_at(x) - 1.0) * g[i];
    residual = std::max(residual, std::abs(lhs - rhs));
  }
  TiltDrift td;
  td.phi = PeriodicFunction(std::move(phi), period);
  td.lambda = ep.lambda;
  td.gamma = ep.gamma;
  td.residual = residual;
  return td;
}

// ---------------------------------------------------------------------------

std::size_t BRWModel::site(long x) const {
  const long l = static_cast<long>(L);
  return static_cast<std::size_t>(((x % l) + l) % l);
}

double BRWModel::rho(long x) const {
  return offspring.rho(offspring.cells() == 1 ? 0 : site(x));
}

void BRWModel::validate() const {
  if (L == 0) throw ConfigError("BRW period L must be positive");
  if (p_left.size() != L || p_stay.size() != L || p_right.size() != L) {
    throw ConfigError("BRW kernel needs L entries in left, stay and right");
  }
  if (offspring.cells() != 1 && offspring.cells() != L) {
    throw ConfigError("BRW offspring law needs 1 or L positions");
  }
  for (unsigned x = 0; x < L; ++x) {
    const double s = p_left[x] + p_stay[x] + p_right[x];
    if (p_left[x] < 0.0 || p_stay[x] < 0.0 || p_right[x] < 0.0 || std::abs(s - 1.0) > 1e-12) {
      throw ConfigError("BRW kernel row " + std::to_string(x) + " is not a probability vector");
    }
  }
  if (offspring.min_children() < 1) throw ConfigError("BRW offspring law must put zero mass on 0 children");
  for (std::size_t c = 0; c < offspring.cells(); ++c) {
    if (!(offspring.rho(c) > 1.0)) throw ConfigError("BRW mean offspring must exceed 1");
  }
  // Irreducibility of the chain on period classes.
  for (unsigned start = 0; start < L; ++start) {
    std::vector<bool> seen(L, false);
    std::queue<unsigned> todo;
    todo.push(start);
    seen[start] = true;
    while (!todo.empty()) {
      const unsigned x = todo.front();
      todo.pop();
      const unsigned nbr[3] = {(x + L - 1) % L, x, (x + 1) % L};
      const double p[3] = {p_left[x], p_stay[x], p_right[x]};
      for (int k = 0; k < 3; ++k) {
        if (p[k] > 0.0 && !seen[nbr[k]]) {
          seen[nbr[k]] = true;
          todo.push(nbr[k]);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw SolverError("BRW kernel is reducible");
  }
}

TransferMatrix brw_transfer(const BRWModel& model, double lambda) {
  const unsigned L = model.L;
  TransferMatrix tm;
  tm.lambda = lambda;
  tm.entries = Eigen::MatrixXd::Zero(L, L);
  for (unsigned x = 0; x < L; ++x) {
    const double r = model.rho(static_cast<long>(x));
    tm.entries(x, (x + L - 1) % L) += r * model.p_left[x] * std::exp(-lambda);
    tm.entries(x, x) += r * model.p_stay[x];
    tm.entries(x, (x + 1) % L) += r * model.p_right[x] * std::exp(lambda);
  }
  return tm;
}

double brw_gamma(const BRWModel& model, double lambda) {
  const TransferMatrix tm = brw_transfer(model, lambda);
  if (model.L == 1) return std::log(tm.entries(0, 0));
  Eigen::EigenSolver<Eigen::MatrixXd> solver(tm.entries, false);
  if (solver.info() != Eigen::Success) throw SolverError("transfer matrix eigendecomposition failed");
  double radius = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    radius = std::max(radius, std::abs(solver.eigenvalues()[i]));
  }
  return std::log(radius);
}

FrontParams brw_front_params(const BRWModel& model, double tol) {
  model.validate();
  return minimize_speed([&](double l) { return brw_gamma(model, l); }, tol);
}

}  // namespace perbbm
