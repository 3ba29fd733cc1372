#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "perbbm/config.hpp"
#include "perbbm/fkpp.hpp"

using namespace perbbm;

namespace {

GridConfig coarse(double dx = 1.0 / 32.0) {
  GridConfig gc;
  gc.dx = dx;
  return gc;
}

std::vector<double> constant_window(const GridConfig& gc, double value) {
  return std::vector<double>(static_cast<std::size_t>(std::lround(gc.window_width / gc.dx)) + 1, value);
}

double max_abs_diff(const std::vector<double>& a, double v) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x - v));
  return m;
}

}  // namespace

TEST_CASE("constant states are fixed points") {
  const auto env = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  const auto gc = coarse();
  for (double v : {0.0, 1.0}) {
    const auto sol = solve_general_fkpp_from(env, constant_window(gc, v), 5.0, gc);
    CHECK(max_abs_diff(sol.frames.back(), v) == 0.0);
    CHECK(sol.recenterings == 0);
  }
}

TEST_CASE("binary offspring law reduces to the plain equation") {
  const auto plain = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  const auto explicit_binary =
      parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)", "offspring": [{"position_index": 0, "probabilities": [0, 0, 1]}]})j");
  const auto gc = coarse();
  const auto a = solve_fkpp(plain, 10.0, gc);
  const auto b = solve_general_fkpp(explicit_binary, 10.0, gc);
  REQUIRE(a.frames.size() == b.frames.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.frames.back().size(); ++i) d = std::max(d, std::abs(a.frames.back()[i] - b.frames.back()[i]));
  CHECK(d < 1e-13);
}

TEST_CASE("grid and step validation") {
  const auto env = parse_env(R"({"g": "1"})");
  GridConfig gc = coarse(0.3);
  CHECK_THROWS_AS(solve_fkpp(env, 1.0, gc), PdeError);
  gc = coarse();
  gc.window_width = 20.0;
  CHECK_THROWS_AS(solve_fkpp(env, 1.0, gc), PdeError);
  gc = coarse();
  gc.dt = 1.0;
  CHECK_THROWS_AS(solve_fkpp(env, 1.0, gc), PdeError);
  gc.dt = 0.0;
  CHECK(stable_dt(env, gc) == doctest::Approx(0.9 * gc.dx * gc.dx / 2.0));
}

TEST_CASE("rightmost crossing") {
  // Invaded state 0 on the left, 1 on the right.
  const std::vector<double> u{0, 0, 0.3, 0.8, 1, 1};
  CHECK(*rightmost_crossing(u, 0.5, 0.0, 1.0) == doctest::Approx(2.4));
  const std::vector<double> twice{0, 0.8, 0.2, 0.3, 0.8, 1};
  CHECK(*rightmost_crossing(twice, 0.5, 10.0, 0.5) == doctest::Approx(10.0 + 0.5 * 3.4));
  CHECK_FALSE(rightmost_crossing(std::vector<double>{0.2, 0.1}, 0.5, 0.0, 1.0));
}

TEST_CASE("front fit recovers an injected trajectory") {
  // u = (1 + tanh(x - X(t))) / 2 around X(t) = v t - c log t + b.
  const double v = 1.3, c = 0.9, b = 2.0;
  PDESolution sol;
  sol.dx = 1.0 / 64.0;
  sol.track_level = 0.5;
  for (int k = 1; k <= 200; ++k) {
    const double t = k;
    const double X = v * t - c * std::log(t) + b;
    const long off = std::lround((X - 20.0) / sol.dx);
    std::vector<double> f(40 * 64);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (1.0 + std::tanh((off + static_cast<long>(i)) * sol.dx - X));
    sol.times.push_back(t);
    sol.window_offsets.push_back(off);
    sol.frames.push_back(std::move(f));
  }
  const auto tr = track_front(sol, 0.5, 20.0, 200.0);
  CHECK(tr.v_hat == doctest::Approx(v).epsilon(1e-6));
  CHECK(tr.c_log_hat == doctest::Approx(c).epsilon(1e-4));
  CHECK(tr.b_hat == doctest::Approx(b).epsilon(1e-4));
  CHECK_THROWS_AS(track_front(sol, 0.5, 20.0, 300.0), PdeError);
  CHECK_THROWS_AS(track_front(sol, 0.95, 20.0, 200.0), PdeError);
  CHECK(sol.value_at(10.0, sol.window_offsets[9] + 5).has_value());
  CHECK_FALSE(sol.value_at(500.0, 0).has_value());
}

TEST_CASE("constant rate: speed, mass and clamping") {
  const auto env = parse_env(R"({"g": "1"})");
  auto gc = coarse();
  gc.keep_frames_from = 150.0;
  const auto sol = solve_fkpp(env, 200.0, gc);
  const auto tr = track_front(sol, 0.5, 100.0, 200.0);
  CHECK(tr.v_hat == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  CHECK(sol.max_clamp <= 1e-10);
  for (std::size_t i = 1; i < sol.invaded_mass.size(); ++i) REQUIRE(sol.invaded_mass[i] >= sol.invaded_mass[i - 1] - 1e-9);
  CHECK(sol.recenterings > 0);
  CHECK(sol.frames.size() == sol.times.size());
  CHECK(sol.times.front() >= 150.0 - 1e-9);
}

TEST_CASE("periodic rate: pulsating front and grid convergence") {
  const auto env = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  const double v_star = find_front_params(env).speed();
  double v[2];
  for (int i = 0; i < 2; ++i) {
    auto gc = coarse(i == 0 ? 1.0 / 16.0 : 1.0 / 32.0);
    gc.keep_frames_from = 145.0;
    const auto sol = solve_fkpp(env, 160.0, gc);
    const auto tr = track_front(sol, 0.5, 80.0, 160.0);
    v[i] = tr.v_hat;
    if (i == 1) {
      CHECK(pulsating_residual(sol, tr.v_hat, 150.0) <= 5e-3);
      CHECK(pulsating_residual(sol, 0.5 * tr.v_hat, 150.0) > 0.1);
    }
  }
  CHECK(std::abs(v[0] - v[1]) < 1e-3 * v[1]);
  CHECK(v[1] == doctest::Approx(v_star).epsilon(0.01));
}

TEST_CASE("general equation speeds match the mirrored eigenvalue speeds") {
  for (const char* doc : {R"({"g": "1", "offspring": [{"position_index": 0, "probabilities": [0, 0, 0, 1]}]})",
                          R"j({"g": "1", "mu": "0.2*sin(2*pi*x)", "sigma": "1"})j",
                          R"j({"g": "1 + 0.3*sin(2*pi*x)", "mu": "0.2*cos(2*pi*x)", "sigma": "1"})j"}) {
    CAPTURE(doc);
    const auto env = parse_env(doc);
    auto gc = coarse();
    gc.keep_frames_from = 150.0;
    const auto sol = solve_general_fkpp(env, 150.0, gc);
    const auto tr = track_front(sol, 0.5, 60.0, 150.0);
    CHECK(tr.v_hat == doctest::Approx(find_front_params(reflected_env(env)).speed()).epsilon(0.01));
  }
}

TEST_CASE("a constant drift moves level sets against it") {
  // u(t, x) = P^x(min X_t >= 0): the front travels at sqrt(2) - mu.
  const auto env = parse_env(R"({"g": "1", "mu": "0.3"})");
  auto gc = coarse();
  gc.keep_frames_from = 150.0;
  const auto tr = track_front(solve_general_fkpp(env, 150.0, gc), 0.5, 60.0, 150.0);
  CHECK(tr.v_hat == doctest::Approx(std::sqrt(2.0) - 0.3).epsilon(0.01));
}

TEST_CASE("a larger rate gives a faster front") {
  const auto a = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  const auto b = parse_env(R"j({"g": "1.2 + 0.5*sin(2*pi*x)"})j");
  auto gc = coarse(1.0 / 16.0);
  gc.keep_frames_from = 100.0;
  const double va = track_front(solve_fkpp(a, 100.0, gc), 0.5, 50.0, 100.0).v_hat;
  const double vb = track_front(solve_fkpp(b, 100.0, gc), 0.5, 50.0, 100.0).v_hat;
  CHECK(vb > va);
}
