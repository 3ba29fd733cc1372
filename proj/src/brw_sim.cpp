#include "perbbm/brw_sim.hpp"

#include <algorithm>
#include <boost/random/binomial_distribution.hpp>
#include <cmath>
#include <span>
#include <string>

namespace perbbm {

namespace {

std::uint64_t binomial(std::uint64_t n, double p, rng::Stream& s) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const auto k = boost::random::binomial_distribution<std::int64_t, double>(static_cast<std::int64_t>(n), p)(s);
  return static_cast<std::uint64_t>(k);
}

// Splits n items over categories with probabilities p (summing to 1).
template <class Sink>
void multinomial(std::uint64_t n, std::span<const double> p, rng::Stream& s, Sink&& sink) {
  double rest = 1.0;
  for (std::size_t k = 0; k < p.size() && n > 0; ++k) {
    const std::uint64_t take = k + 1 == p.size() ? n : binomial(n, rest > 0.0 ? p[k] / rest : 1.0, s);
    if (take > 0) sink(k, take);
    n -= take;
    rest -= p[k];
  }
}

}  // namespace

std::uint64_t BRWPopulation::total() const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

BRWPopulation run_brw(const BRWModel& model, std::size_t n_gen, long window, rng::Stream stream) {
  if (window < 1) throw std::invalid_argument("BRW prune window must be at least 1");
  BRWPopulation pop;
  pop.counts = {1};
  std::vector<std::uint64_t> next;
  for (std::size_t gen = 0; gen < n_gen; ++gen) {
    next.assign(pop.counts.size() + 2, 0);
    for (std::size_t i = 0; i < pop.counts.size(); ++i) {
      if (pop.counts[i] == 0) continue;
      const long x = pop.base + static_cast<long>(i);
      const std::size_t site = model.site(x);
      const auto law = model.offspring.probabilities(model.offspring.cells() == 1 ? 0 : site);
      std::uint64_t children = 0;
      multinomial(pop.counts[i], law, stream, [&](std::size_t k, std::uint64_t m) { children += k * m; });
      const double jump[3] = {model.p_left[site], model.p_stay[site], model.p_right[site]};
      multinomial(children, jump, stream, [&](std::size_t k, std::uint64_t m) { next[i + k] += m; });
    }
    pop.base -= 1;
    std::size_t hi = next.size();
    while (hi > 0 && next[hi - 1] == 0) --hi;
    pop.max_position = pop.base + static_cast<long>(hi) - 1;
    const long floor = pop.max_position - window;
    std::size_t lo = 0;
    if (floor > pop.base) {
      lo = static_cast<std::size_t>(floor - pop.base);
      for (std::size_t i = 0; i < lo; ++i) pop.pruned += next[i];
    }
    pop.counts.assign(next.begin() + static_cast<long>(lo), next.begin() + static_cast<long>(hi));
    pop.base += static_cast<long>(lo);
    pop.generation = gen + 1;
    if (pop.total() > kBRWCap) throw CapExceeded("BRW population exceeds " + std::to_string(kBRWCap));
  }
  return pop;
}

FrontParams require_brw_front(const BRWModel& model) {
  model.validate();
  const auto fp = brw_front_params(model);
  if (!fp.attained) throw RegimeError("minimizer not attained");
  if (!(fp.speed() > 0.0)) throw RegimeError("unsupported regime: v* <= 0");
  return fp;
}

BRWSamples simulate_brw(const BRWModel& model, std::size_t n_gen, long prune_window, std::size_t trials,
                        std::uint64_t seed, Exec exec, std::uint64_t first_trial) {
  const auto fp = require_brw_front(model);
  if (n_gen < 1) throw std::invalid_argument("need at least one generation");
  BRWSamples out;
  out.n = n_gen;
  out.m_n = front_position(fp, static_cast<double>(n_gen));
  out.max.resize(trials);
  out.centered.resize(trials);
  for_each_index(trials, exec, [&](std::size_t k) {
    const auto pop = run_brw(model, n_gen, prune_window, rng::trial_stream(seed, first_trial + k));
    out.max[k] = pop.max_position;
    out.centered[k] = static_cast<double>(pop.max_position) - out.m_n;
  });
  return out;
}

}  // namespace perbbm
