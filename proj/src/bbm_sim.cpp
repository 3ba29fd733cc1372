#include "perbbm/bbm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace perbbm {

namespace {

constexpr std::uint64_t kNoParent = std::numeric_limits<std::uint64_t>::max();

struct Live {
  double x;
  double t0;      // time the position refers to
  double t_next;  // next candidate branching time
  std::uint64_t id;
  std::uint64_t parent;
  rng::Stream stream;
  bool alive;
};

class Engine {
 public:
  Engine(const EnvironmentSpec& env, double dt, const PruneConfig& prune)
      : env_(env),
        dt_(dt),
        prune_(prune),
        exact_(env.standard_motion()),
        binary_(env.binary_offspring()),
        constant_g_(env.g.is_constant()),
        beta_(env.g.bounds().max) {}

  PopulationSnapshot run(rng::Stream root, double x0, double t_end, bool keep_particles) {
    PopulationSnapshot snap;
    snap.prune_window = prune_.enabled ? prune_.window : std::numeric_limits<double>::infinity();
    snap.first_branch_time = t_end;
    std::vector<Live> pop;
    pop.push_back({x0, 0.0, 0.0, 0, kNoParent, root, true});
    pop[0].t_next = pop[0].stream.exponential(beta_);
    std::uint64_t next_id = 1;
    const auto sweeps = static_cast<std::size_t>(std::ceil(t_end / prune_.interval - 1e-9));
    for (std::size_t k = 1; k <= sweeps; ++k) {
      const double s_next = k == sweeps ? t_end : std::min(t_end, static_cast<double>(k) * prune_.interval);
      // Offspring are appended and processed in the same pass.
      for (std::size_t i = 0; i < pop.size(); ++i) {
        advance(pop, i, s_next, next_id, snap);
        if (pop.size() > prune_.hard_cap + pop.size() / 2 && live_count(pop) > prune_.hard_cap) {
          throw CapExceeded("population exceeds hard cap of " + std::to_string(prune_.hard_cap));
        }
      }
      double mx = -std::numeric_limits<double>::infinity();
      for (const auto& p : pop) {
        if (p.alive) mx = std::max(mx, p.x);
      }
      const double floor = prune_.enabled ? mx - prune_.window : -std::numeric_limits<double>::infinity();
      std::size_t w = 0;
      for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!pop[i].alive) continue;
        if (pop[i].x < floor) {
          ++snap.pruned_count;
          continue;
        }
        if (w != i) pop[w] = pop[i];
        ++w;
      }
      pop.resize(w);
      if (pop.size() > prune_.hard_cap) {
        throw CapExceeded("population exceeds hard cap of " + std::to_string(prune_.hard_cap));
      }
      snap.peak_population = std::max(snap.peak_population, pop.size());
    }
    snap.time = t_end;
    snap.max_position = -std::numeric_limits<double>::infinity();
    for (const auto& p : pop) snap.max_position = std::max(snap.max_position, p.x);
    if (keep_particles) {
      snap.particles.reserve(pop.size());
      for (const auto& p : pop) snap.particles.push_back({p.x, p.id, p.parent});
    }
    return snap;
  }

 private:
  static std::size_t live_count(const std::vector<Live>& pop) {
    std::size_t n = 0;
    for (const auto& p : pop) n += p.alive ? 1 : 0;
    return n;
  }

  void move(double& x, double tau, rng::Stream& s) const {
    if (exact_) {
      x += std::sqrt(tau) * s.normal();
      return;
    }
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tau / dt_ - 1e-12)));
    const double h = tau / static_cast<double>(steps);
    const double sh = std::sqrt(h);
    for (std::size_t i = 0; i < steps; ++i) x += env_.mu_at(x) * h + env_.sigma_at(x) * sh * s.normal();
  }

  // Runs pop[i] up to `until`, or to its branching time (offspring are appended).
  void advance(std::vector<Live>& pop, std::size_t i, double until, std::uint64_t& next_id,
               PopulationSnapshot& snap) const {
    Live p = pop[i];
    for (;;) {
      if (p.t_next >= until) {
        if (until > p.t0) move(p.x, until - p.t0, p.stream);
        p.t0 = until;
        pop[i] = p;
        return;
      }
      move(p.x, p.t_next - p.t0, p.stream);
      p.t0 = p.t_next;
      const bool accept = constant_g_ || p.stream.uniform() * beta_ < env_.g(p.x);
      if (!accept) {
        p.t_next += p.stream.exponential(beta_);
        continue;
      }
      ++snap.branch_events;
      snap.first_branch_time = std::min(snap.first_branch_time, p.t0);
      const unsigned children = binary_ ? 2u : env_.offspring->sample(p.x, p.stream.uniform());
      p.alive = false;
      pop[i] = p;
      for (unsigned j = 0; j < children; ++j) {
        Live c{p.x, p.t0, 0.0, next_id++, p.id, p.stream.split(j), true};
        c.t_next = c.t0 + c.stream.exponential(beta_);
        pop.push_back(c);
      }
      return;
    }
  }

  const EnvironmentSpec& env_;
  double dt_;
  PruneConfig prune_;
  bool exact_;
  bool binary_;
  bool constant_g_;
  double beta_;
};

void check_run(const EnvironmentSpec& env, double t_end, double dt, const PruneConfig& prune) {
  env.validate(ModelKind::continuous);
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be non-negative");
  if (!(dt > 0.0) || dt > kMaxDt) throw std::invalid_argument("dt must lie in (0, 1e-2]");
  if (prune.enabled && !(prune.window > 0.0)) throw std::invalid_argument("prune window must be positive");
  if (!(prune.interval > 0.0)) throw std::invalid_argument("prune interval must be positive");
}

}  // namespace

PopulationSnapshot simulate_bbm(const EnvironmentSpec& env, double t_end, double dt, const PruneConfig& prune,
                                rng::Stream root, double x0) {
  check_run(env, t_end, dt, prune);
  return Engine(env, dt, prune).run(root, x0, t_end, true);
}

PopulationSnapshot simulate_bbm(const EnvironmentSpec& env, double t_end, double dt, const PruneConfig& prune,
                                std::uint64_t seed, double x0) {
  return simulate_bbm(env, t_end, dt, prune, rng::trial_stream(seed, 0), x0);
}

FrontParams require_positive_speed(const EnvironmentSpec& env) {
  const auto fp = find_front_params(env);
  if (!fp.attained || !(*fp.v_star > 0.0)) throw RegimeError("unsupported regime: v* <= 0");
  return fp;
}

PopulationSnapshot simulate_diffusion_bbm(const EnvironmentSpec& env, double t_end, double dt,
                                          const PruneConfig& prune, std::uint64_t seed, double x0) {
  check_run(env, t_end, dt, prune);
  require_positive_speed(env);
  return simulate_bbm(env, t_end, dt, prune, seed, x0);
}

std::vector<MaxRecord> max_samples(const EnvironmentSpec& env, const FrontParams& fp, double t, std::size_t trials,
                                   std::uint64_t seed, const MaxSampleOptions& opt) {
  check_run(env, t, opt.dt, opt.prune);
  const double m_t = front_position(fp, t);
  const Engine engine(env, opt.dt, opt.prune);
  std::vector<MaxRecord> out(trials);
  for_each_index(trials, opt.exec, [&](std::size_t k) {
    Engine local = engine;
    const auto snap = local.run(rng::trial_stream(seed, opt.first_trial + k), opt.x0, t, false);
    out[k] = {snap.max_position, snap.max_position - m_t, snap.pruned_count, snap.peak_population};
  });
  return out;
}

std::vector<double> centered_values(const std::vector<MaxRecord>& records) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.centered);
  return v;
}

double ManyToOneResult::stderr_combined() const { return std::hypot(lhs_stderr, rhs_stderr); }

ManyToOneResult many_to_one_check(const EnvironmentSpec& env, double t, std::pair<double, double> window,
                                  std::size_t trials, std::uint64_t seed, double dt, Exec exec) {
  env.validate(ModelKind::continuous);
  const auto [a, b] = window;
  ManyToOneResult res;
  if (!(b > a) || trials == 0) return res;
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");

  PruneConfig off;
  off.enabled = false;
  const Engine engine(env, kMaxDt, off);
  std::vector<double> lhs(trials), rhs(trials);
  const auto steps = static_cast<std::size_t>(std::ceil(t / dt - 1e-9));
  const double h = t / static_cast<double>(steps);
  const double sh = std::sqrt(h);
  for_each_index(trials, exec, [&](std::size_t k) {
    Engine local = engine;
    const auto snap = local.run(rng::trial_stream(seed, k), 0.0, t, true);
    double count = 0.0;
    for (const auto& p : snap.particles) count += (p.position >= a && p.position <= b) ? 1.0 : 0.0;
    lhs[k] = count;

    auto s = rng::trial_stream(seed, k, 1);
    double x = 0.0, gx = env.g(0.0), integral = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      x += env.mu_at(x) * h + env.sigma_at(x) * sh * s.normal();
      const double gn = env.g(x);
      integral += 0.5 * h * (gx + gn);
      gx = gn;
    }
    rhs[k] = (x >= a && x <= b) ? std::exp(integral) : 0.0;
  });
  auto mean_se = [&](const std::vector<double>& v, double& mean, double& se) {
    double s = 0.0, s2 = 0.0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    for (double x : v) s2 += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(s2 / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  };
  mean_se(lhs, res.lhs, res.lhs_stderr);
  mean_se(rhs, res.rhs, res.rhs_stderr);
  return res;
}

}  // namespace perbbm
