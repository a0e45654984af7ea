// Serial references against the OpenMP kernels on fixed random systems.
#include <benchmark/benchmark.h>

#include <vector>

#include "coevo/detectors.hpp"
#include "coevo/harvest.hpp"
#include "support.hpp"

using namespace coevo;
using namespace coevo::test;

namespace {

struct Pair {
  AgentSpec society;
  AgentSpec environment;
};

Pair random_pair(std::size_t machines, Symbol card) {
  Rng gen(42);
  Pair p;
  p.environment = random_agent(machines, card, 2, std::vector<Symbol>(machines, card), gen);
  p.society = random_agent(machines, card, 2, p.environment.cardinalities(), gen);
  p.society.sigma = 0.3;
  p.environment.sigma = 0.2;
  return p;
}

void BM_Rollout(benchmark::State& state, bool parallel) {
  const Pair p = random_pair(3, 2);
  const auto r = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    JointCounts jc = parallel ? ensemble_rollout(p.society, p.environment, BoundaryModel{}, SeedPlan(1), r)
                              : ensemble_rollout_serial(p.society, p.environment, BoundaryModel{}, SeedPlan(1), r);
    benchmark::DoNotOptimize(jc);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PropagationTable(benchmark::State& state, bool parallel) {
  const Pair p = random_pair(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    PropagationTable t = parallel ? propagation_table(p.environment) : propagation_table_serial(p.environment);
    benchmark::DoNotOptimize(t);
  }
}

void BM_ExactJoint(benchmark::State& state, bool parallel) {
  const Pair p = random_pair(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    ExactJoint j = parallel ? exact_joint(p.society, p.environment, BoundaryModel{})
                            : exact_joint_serial(p.society, p.environment, BoundaryModel{});
    benchmark::DoNotOptimize(j);
  }
}

void BM_PhaseSweep(benchmark::State& state, bool parallel) {
  std::vector<double> degrees;
  for (int i = 2; i <= 30; ++i) degrees.push_back(i / 10.0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    PhaseSweep s = parallel ? phase_sweep(n, degrees, 20, 3) : phase_sweep_serial(n, degrees, 20, 3);
    benchmark::DoNotOptimize(s);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Rollout, serial, false)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Rollout, openmp, true)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PropagationTable, serial, false)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PropagationTable, openmp, true)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ExactJoint, serial, false)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ExactJoint, openmp, true)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PhaseSweep, serial, false)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PhaseSweep, openmp, true)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
