#include <benchmark/benchmark.h>

#include <cmath>

#include "starlab/expansion.hpp"
#include "starlab/functionals.hpp"
#include "starlab/homogeneous.hpp"
#include "starlab/lagrangian.hpp"
#include "starlab/profile.hpp"

using namespace starlab;

namespace {

InitialData seeded_data(const LagrangianGrid& g) {
  ShapeSpec s;
  s.family = Family::RandomSmooth;
  s.amplitude = 1.0;
  InitialData d;
  d.theta0 = make_shape(g, s);
  s.seed = 2;
  d.theta1 = make_shape(g, s);
  scale_to_amplitude(d, g, 1e-3);
  return d;
}

}  // namespace

static void BM_IsentropicProfile(benchmark::State& state) {
  GridSpec spec;
  spec.cells = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_isentropic_profile(-0.001, spec).R0);
}
BENCHMARK(BM_IsentropicProfile)->Arg(200)->Arg(800);

static void BM_ThermoProfile(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(solve_thermo_profile(1.0, 0.25).R0);
}
BENCHMARK(BM_ThermoProfile);

static void BM_PhaseTrajectory(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(integrate_phase({0.1, -0.05, -0.5}, 10.0).s.size());
}
BENCHMARK(BM_PhaseTrajectory);

static void BM_LinearEvolution(benchmark::State& state) {
  const IsentropicProfile p = solve_isentropic_profile(0.0);
  const LagrangianGrid g = make_grid(p, static_cast<std::size_t>(state.range(0)));
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  const InitialData d = seeded_data(g);
  std::size_t steps = 0;
  for (auto _ : state) {
    const EvolutionRun run = evolve_linear_isentropic(g, par, d, 1.0, {});
    steps += run.steps;
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_LinearEvolution)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_LedgerObserve(benchmark::State& state) {
  const IsentropicProfile p = solve_isentropic_profile(0.0);
  const LagrangianGrid g = make_grid(p, 60);
  const ExpansionParams par = classify_expansion(0.0, 1.0, 1.0);
  std::vector<PerturbationField> fields;
  evolve_linear_isentropic(g, par, seeded_data(g), 0.2, {},
                           [&](const PerturbationField& f, const StepInfo&) { fields.push_back(f); });
  for (auto _ : state) {
    LedgerAccumulator acc(g, Regime::LinearIsentropic, par);
    for (const auto& f : fields) benchmark::DoNotOptimize(acc.observe(f).E_pert);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * fields.size()));
}
BENCHMARK(BM_LedgerObserve);
BENCHMARK_MAIN();
