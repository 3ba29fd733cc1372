#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "perbbm/config.hpp"
#include "perbbm/eigen.hpp"

using namespace perbbm;

namespace {

// Fourier (Hill) discretization of 1/2 d2 + lambda d + lambda^2/2 + g for
// g = c0 + a sin(2 pi x) + b cos(2 pi x), modes |k| <= K.
double hill_gamma(double c0, double a, double b, double lambda, int K = 40) {
  using C = std::complex<double>;
  const int n = 2 * K + 1;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  const C i1(0.0, 1.0);
  // g_hat(+1) = b/2 - i a/2, g_hat(-1) = b/2 + i a/2.
  const C gp = 0.5 * b - 0.5 * a * i1, gm = 0.5 * b + 0.5 * a * i1;
  for (int r = 0; r < n; ++r) {
    const double k = 2.0 * M_PI * (r - K);
    m(r, r) = -0.5 * k * k + i1 * lambda * k + 0.5 * lambda * lambda + c0;
    if (r > 0) m(r, r - 1) = gp;
    if (r + 1 < n) m(r, r + 1) = gm;
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  double best = -1e300;
  for (int r = 0; r < n; ++r) best = std::max(best, es.eigenvalues()[r].real());
  return best;
}

EnvironmentSpec sine_env() { return parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j"); }

}  // namespace

TEST_CASE("constant rate: closed forms") {
  const auto env = parse_env(R"({"g": "1"})");
  for (double lam : {0.1, 0.7, 1.0, 2.5}) {
    CHECK(solve_eigenpair(env, lam, 64).gamma == doctest::Approx(lam * lam / 2 + 1).epsilon(1e-12));
  }
  const auto fp = find_front_params(env);
  REQUIRE(fp.attained);
  CHECK(std::abs(fp.lambda() - std::sqrt(2.0)) < 1e-9);
  CHECK(std::abs(fp.speed() - std::sqrt(2.0)) < 1e-9);
  CHECK(std::abs(fp.log_coefficient() - 3.0 / (2.0 * std::sqrt(2.0))) < 1e-9);
  CHECK(front_position(fp, 1.0) == doctest::Approx(std::sqrt(2.0)));

  const auto e2 = parse_env(R"({"g": "3", "mu": "0.5", "sigma": "2", "offspring": [{"position_index": 0, "probabilities": [0, 0, 0, 1]}]})");
  for (double lam : {0.3, 1.1}) {
    CHECK(solve_eigenpair(e2, lam, 64).gamma == doctest::Approx(2.0 * lam * lam + 0.5 * lam + 6.0).epsilon(1e-12));
  }
}

TEST_CASE("generator stencil on four points") {
  const auto env = parse_env(R"({"g": "1"})");
  const auto op = assemble_generator(env, 1.0, 4);
  REQUIRE(op.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(op.lower[i] == doctest::Approx(6.0));
    CHECK(op.upper[i] == doctest::Approx(10.0));
    CHECK(op.diag(i) == doctest::Approx(-14.5));
  }
  const Eigen::MatrixXd d = op.to_dense();
  CHECK(d(0, 3) == doctest::Approx(6.0));
  CHECK(d(3, 0) == doctest::Approx(10.0));
  CHECK_THROWS(assemble_generator(env, 1.0, 3));
}

TEST_CASE("sine rate against the Fourier oracle") {
  const auto env = sine_env();
  for (double lam : {0.2, 1.0, 1.4191831, 3.0}) {
    const double ref = hill_gamma(1.0, 0.5, 0.0, lam);
    const auto ep = solve_eigenpair(env, lam, 1024);
    CHECK(std::abs(ep.gamma - ref) < 2e-5);
    CHECK(ep.residual_norm < 1e-8);
  }
}

TEST_CASE("second-order convergence in the grid") {
  const auto env = sine_env();
  const double ref = hill_gamma(1.0, 0.5, 0.0, 1.3);
  const double e1 = std::abs(solve_eigenpair(env, 1.3, 128).gamma - ref);
  const double e2 = std::abs(solve_eigenpair(env, 1.3, 256).gamma - ref);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("dense and iterative solvers agree") {
  const auto env = sine_env();
  const auto op = assemble_generator(env, 0.8, 64);
  const auto a = principal_eigenpair(op, 0.8);
  const auto b = principal_eigenpair(op.to_dense(), 0.8, 1.0);
  CHECK(a.gamma == doctest::Approx(b.gamma).epsilon(1e-11));
  CHECK(a.bracket_width < 1e-10);
}

TEST_CASE("front constants against a brute-force scan") {
  const auto env = sine_env();
  const std::size_t n = 256;
  double best = 1e300, arg = 0.0;
  for (int i = 0; i <= 2500; ++i) {
    const double lam = 0.5 + 1e-3 * i;
    const double r = solve_eigenpair(env, lam, n).gamma / lam;
    if (r < best) best = r, arg = lam;
  }
  const auto fp = find_front_params(env, 1e-8, n);
  REQUIRE(fp.attained);
  CHECK(std::abs(fp.lambda() - arg) <= 1e-3);
  CHECK(fp.speed() <= best + 1e-12);
  CHECK(best - fp.speed() < 1e-6);
  CHECK(fp.stationarity_gap < 1e-6);
}

TEST_CASE("minimize_speed on analytic curves") {
  const auto fp = minimize_speed([](double l) { return l * l / 2 + 1; });
  CHECK(std::abs(fp.lambda() - std::sqrt(2.0)) < 1e-9);
  const auto flat = minimize_speed([](double l) { return std::log(2 * std::cosh(l)); });
  CHECK_FALSE(flat.attained);
  CHECK_THROWS_AS(flat.speed(), SolverError);
}

TEST_CASE("shifting the environment leaves gamma unchanged") {
  const auto env = sine_env();
  EnvironmentSpec shifted = env;
  shifted.g = env.g.shifted(0.25);
  for (double lam : {0.5, 1.5}) {
    CHECK(solve_eigenpair(shifted, lam).gamma == doctest::Approx(solve_eigenpair(env, lam).gamma).epsilon(1e-9));
  }
}

TEST_CASE("tilt drift solves its Riccati equation") {
  const auto env = sine_env();
  const auto ep = solve_eigenpair(env, 1.4);
  const auto td = tilt_drift(ep, env);
  CHECK(td.residual < 1e-4);
  const auto flat = tilt_drift(solve_eigenpair(parse_env(R"({"g": "1"})"), 1.4), parse_env(R"({"g": "1"})"));
  CHECK(flat.phi(0.3) == doctest::Approx(1.4));
}

TEST_CASE("lattice: transfer entries and closed-form gamma") {
  BRWModel lazy;
  lazy.p_left = {0.25};
  lazy.p_stay = {0.5};
  lazy.p_right = {0.25};
  CHECK(brw_transfer(lazy, 0.7).entries(0, 0) == doctest::Approx(2 * (0.5 + 0.5 * std::cosh(0.7))));
  CHECK(brw_gamma(lazy, 1.3) == doctest::Approx(std::log(1 + std::cosh(1.3))));

  // lambda gamma' = gamma for gamma = log(1 + cosh), by bisection.
  const auto h = [](double l) { return l * std::sinh(l) / (1 + std::cosh(l)) - std::log(1 + std::cosh(l)); };
  double a = 0.1, b = 10.0;
  for (int i = 0; i < 200; ++i) (h(0.5 * (a + b)) < 0 ? a : b) = 0.5 * (a + b);
  const auto fp = brw_front_params(lazy);
  REQUIRE(fp.attained);
  CHECK(std::abs(fp.lambda() - a) < 1e-7);
  CHECK(std::abs(fp.speed() - std::log(1 + std::cosh(a)) / a) < 1e-12);

  BRWModel simple;
  simple.p_left = {0.5};
  simple.p_stay = {0.0};
  simple.p_right = {0.5};
  CHECK(brw_gamma(simple, 0.9) == doctest::Approx(std::log(2 * std::cosh(0.9))));
  CHECK_FALSE(brw_front_params(simple).attained);

  BRWModel rightward;
  rightward.p_left = {0.0};
  rightward.p_stay = {0.5};
  rightward.p_right = {0.5};
  CHECK_FALSE(brw_front_params(rightward).attained);
}

TEST_CASE("lattice: period two matches the 2x2 spectral radius") {
  BRWModel m;
  m.L = 2;
  m.p_left = {0.3, 0.2};
  m.p_stay = {0.4, 0.2};
  m.p_right = {0.3, 0.6};
  m.offspring = OffspringLaw({{0, 0, 1}, {0, 0, 0.5, 0.5}}, 2.0);
  const double lam = 0.8;
  const double r0 = 2.0, r1 = 2.5;
  // Site 0 reaches site 1 by either step; site 1 reaches 0 likewise.
  const double a00 = r0 * 0.4, a01 = r0 * (0.3 * std::exp(-lam) + 0.3 * std::exp(lam));
  const double a11 = r1 * 0.2, a10 = r1 * (0.2 * std::exp(-lam) + 0.6 * std::exp(lam));
  const double tr = a00 + a11, det = a00 * a11 - a01 * a10;
  const double rho = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  const auto t = brw_transfer(m, lam);
  CHECK(t.entries(0, 1) == doctest::Approx(a01));
  CHECK(t.entries(1, 0) == doctest::Approx(a10));
  CHECK(brw_gamma(m, lam) == doctest::Approx(std::log(rho)).epsilon(1e-12));
}

TEST_CASE("property: bounds and convexity for random trigonometric rates") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    char buf[200];
    std::snprintf(buf, sizeof buf, R"j({"g": "1 + %.6f*sin(2*pi*x) + %.6f*cos(4*pi*x) + %.6f*sin(6*pi*x)"})j", a, b, c);
    const auto env = parse_env(buf);
    const auto bd = env.g.bounds();
    std::vector<double> gam;
    for (int i = 0; i < 30; ++i) {
      const double lam = 0.1 + 0.1 * i;
      const double g = solve_eigenpair(env, lam, 256).gamma;
      REQUIRE(g >= lam * lam / 2 + bd.min - 1e-10);
      REQUIRE(g <= lam * lam / 2 + bd.max + 1e-10);
      gam.push_back(g);
    }
    for (std::size_t i = 1; i + 1 < gam.size(); ++i) REQUIRE(gam[i + 1] - 2 * gam[i] + gam[i - 1] >= -1e-8);
    const auto fp = find_front_params(env, 1e-8, 256);
    REQUIRE(fp.attained);
    REQUIRE(fp.speed() >= std::sqrt(2 * bd.min) - 1e-9);
    REQUIRE(fp.speed() <= std::sqrt(2 * bd.max) + 1e-9);
  }
}
