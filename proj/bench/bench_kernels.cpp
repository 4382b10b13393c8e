// Serial reference vs OpenMP kernels: Bellman sweeps and replicated simulation.
#include <benchmark/benchmark.h>

#include <vector>

#include "ehrse/mdp.hpp"
#include "ehrse/sim.hpp"

namespace {

using namespace ehrse;

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

SystemModel scalar_system() {
  return SystemModel(scalar(0.9), scalar(0.7), scalar(0.8), scalar(0.8), scalar(0.8));
}

EnergyModel energy(int capacity) {
  std::vector<double> good(capacity + 1), bad(capacity + 1);
  for (int r = 0; r <= capacity; ++r) {
    good[r] = r + 1.0;
    bad[r] = capacity + 1.0 - r;
  }
  double sg = 0, sb = 0;
  for (int r = 0; r <= capacity; ++r) sg += good[r], sb += bad[r];
  for (int r = 0; r <= capacity; ++r) good[r] /= sg, bad[r] /= sb;
  return {EnvironmentChain(0.7, 0.3, 0.2, 0.8), HarvestDistribution(good, bad)};
}

template <bool Parallel>
void BM_BellmanSweep(benchmark::State& state) {
  const int capacity = static_cast<int>(state.range(0));
  const MdpProblem p(scalar_system(), ChannelModel::from_lambda(0.7), energy(capacity), 60);
  const int n = p.num_states();
  std::vector<double> h(n, 0.0), w(n);
  std::vector<int> a(n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      bellman_sweep_parallel(p, h, w, a);
    } else {
      bellman_sweep_serial(p, h, w, a);
    }
    benchmark::DoNotOptimize(w.data());
  }
  state.counters["states"] = n;
}
BENCHMARK(BM_BellmanSweep<false>)->Name("bellman_sweep/serial")->Arg(3)->Arg(10)->Arg(20);
BENCHMARK(BM_BellmanSweep<true>)->Name("bellman_sweep/openmp")->Arg(3)->Arg(10)->Arg(20);

template <bool Parallel>
void BM_Simulate(benchmark::State& state) {
  SimConfig c;
  c.horizon = 2000;
  c.replications = state.range(0);
  c.record_stride = 100;
  const Simulator sim(scalar_system(), ChannelModel::from_lambda(0.7), energy(3), c);
  const Policy policy = Policy::threshold({2, 1});
  for (auto _ : state) {
    SimResult r = Parallel ? sim.run(policy) : sim.run_serial(policy);
    benchmark::DoNotOptimize(r.final_cost.data());
  }
  state.SetItemsProcessed(state.iterations() * c.horizon * c.replications);
}
BENCHMARK(BM_Simulate<false>)->Name("simulate/serial")->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate<true>)->Name("simulate/openmp")->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
