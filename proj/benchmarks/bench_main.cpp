#include <benchmark/benchmark.h>

#include <random>

#include "sanctsim/analysis.hpp"
#include "sanctsim/engine.hpp"
#include "sanctsim/metrics.hpp"

using namespace sanctsim;

namespace {

std::vector<PolicyPtr> mixed_roster() {
  std::vector<PolicyPtr> roster;
  for (int i = 0; i < 4; ++i) roster.push_back(make_full_cooperator());
  roster.push_back(make_conditional_cooperator(10));
  roster.push_back(make_norm_enforcer(0.25, 0.25));
  roster.push_back(make_free_rider());
  return roster;
}

void BM_RunSimulation(benchmark::State& state) {
  EngineConfig config;
  config.seed = 11;
  std::vector<PolicyPtr> roster = mixed_roster();
  for (auto _ : state) {
    RunTranscript t = run_simulation(config, roster);
    benchmark::DoNotOptimize(t.rounds.size());
  }
}
BENCHMARK(BM_RunSimulation);

void BM_RunMetrics(benchmark::State& state) {
  EngineConfig config;
  config.seed = 11;
  RunTranscript t = run_simulation(config, mixed_roster());
  for (auto _ : state) {
    MetricsSummary s = run_metrics(t);
    benchmark::DoNotOptimize(s.contribution_mean);
  }
}
BENCHMARK(BM_RunMetrics);

void BM_HierarchicalBootstrap(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(10.0, 2.0);
  NestedObservations groups;
  for (int m = 0; m < 4; ++m) {
    std::string model = "model" + std::to_string(m);
    for (int r = 0; r < 8; ++r)
      for (int i = 0; i < 15; ++i) groups[model][r].push_back(noise(rng));
  }
  auto mean = [](const std::vector<double>& xs) {
    double s = 0;
    for (double x : xs) s += x;
    return s / xs.size();
  };
  for (auto _ : state) {
    BootstrapResult r = hierarchical_bootstrap(
        groups, mean, static_cast<int>(state.range(0)), 0.95, 7);
    benchmark::DoNotOptimize(r.lo);
  }
}
BENCHMARK(BM_HierarchicalBootstrap)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
