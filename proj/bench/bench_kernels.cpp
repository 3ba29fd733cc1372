// Serial against OpenMP timings of the hot kernels.

#include <benchmark/benchmark.h>

#include <cmath>

#include "perbbm/brw_sim.hpp"
#include "perbbm/config.hpp"
#include "perbbm/fkpp.hpp"
#include "perbbm/split_sampler.hpp"
#include "perbbm/tilted.hpp"

using namespace perbbm;

namespace {

const EnvironmentSpec& periodic() {
  static const EnvironmentSpec e = parse_env(R"j({"g": "1 + 0.5*sin(2*pi*x)"})j");
  return e;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_FkppRhs(benchmark::State& st) {
  const auto c = kernels::make_coefficients(periodic(), 1.0 / 64.0);
  const std::size_t n = 5121;
  const auto wc = kernels::window_coefficients(c, -1280, n);
  std::vector<double> w(n), out(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::tanh((static_cast<double>(i) - 1280.0) / 64.0));
  for (auto _ : st) {
    kernels::fkpp_rhs(c, wc, w, out, exec_of(st));
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n));
}
BENCHMARK(BM_FkppRhs)->Arg(0)->Arg(1);

void BM_MaxSamples(benchmark::State& st) {
  const auto fp = find_front_params(periodic());
  MaxSampleOptions o;
  o.prune.window = 6.0;
  o.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(max_samples(periodic(), fp, 10.0, 64, 1, o));
  st.SetItemsProcessed(st.iterations() * 64);
}
BENCHMARK(BM_MaxSamples)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_FirstPassage(benchmark::State& st) {
  const auto fp = find_front_params(periodic());
  const auto td = tilt_drift(solve_eigenpair(periodic(), fp.lambda()), periodic());
  for (auto _ : st) benchmark::DoNotOptimize(first_passage_times(td, 0.0, 1.0, kTiltedDt, 1000, 2, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * 1000);
}
BENCHMARK(BM_FirstPassage)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Brw(benchmark::State& st) {
  BRWModel m;
  m.p_left = {0.25};
  m.p_stay = {0.5};
  m.p_right = {0.25};
  for (auto _ : st) benchmark::DoNotOptimize(simulate_brw(m, 100, 10, 256, 3, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * 256);
}
BENCHMARK(BM_Brw)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MaxLawTable(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(MaxLawTable(periodic(), 4.0, 1.0 / 32.0, exec_of(st)));
}
BENCHMARK(BM_MaxLawTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SplitSamples(benchmark::State& st) {
  const auto fp = find_front_params(periodic());
  static const MaxLawTable law(periodic(), 6.0, 1.0 / 32.0);
  SplitSampleOptions o;
  o.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(split_max_samples(periodic(), fp, 10.0, 256, 3, law, o));
  st.SetItemsProcessed(st.iterations() * 256);
}
BENCHMARK(BM_SplitSamples)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
