#include <benchmark/benchmark.h>

#include <vector>

#include "nesua/baselines.hpp"
#include "nesua/gat.hpp"
#include "nesua/scenario.hpp"
#include "nesua/training.hpp"

namespace {

using namespace nesua;

ScenarioConfig config(int k, int n) {
  ScenarioConfig c;
  c.n_ues = k;
  c.n_cells = n;
  return c;
}

void BM_GenerateScenario(benchmark::State& state) {
  const auto cfg = config(static_cast<int>(state.range(0)), 7);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_scenario(cfg, seed++));
}
BENCHMARK(BM_GenerateScenario)->Arg(20)->Arg(50);

void BM_BuildGraph(benchmark::State& state) {
  const auto s = generate_scenario(config(static_cast<int>(state.range(0)), 7), 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(s, 0.0));
}
BENCHMARK(BM_BuildGraph)->Arg(20)->Arg(50);

// Forward pass plus backward through the full loss, as in one training step.
void BM_GatStep(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(1));
  const auto s = generate_scenario(config(static_cast<int>(state.range(0)), 7), 2);
  auto g = build_graph(s, 0.0);
  std::vector<GraphInstance> one{g};
  NormStats::fit(one).apply(g);
  GatConfig gc;
  gc.hidden1 = hidden;
  gc.hidden2 = hidden;
  auto model = GatModel::init(gc, 3);
  const PowerParams p;
  for (auto _ : state) {
    ad::Tape tape;
    auto l = loss(forward(tape, g, model), g.prb, p, LossConfig{}, g.n_prb_total);
    tape.backward(l);
    benchmark::DoNotOptimize(l.item());
  }
}
BENCHMARK(BM_GatStep)->Args({20, 32})->Args({50, 32})->Args({50, 128});

void BM_GatInfer(benchmark::State& state) {
  const auto s = generate_scenario(config(50, 7), 4);
  const auto g = build_graph(s, 0.0);
  GatConfig gc;
  gc.hidden1 = static_cast<int>(state.range(0));
  gc.hidden2 = gc.hidden1;
  const auto model = GatModel::init(gc, 5);
  for (auto _ : state) benchmark::DoNotOptimize(infer(g, model));
}
BENCHMARK(BM_GatInfer)->Arg(32)->Arg(128);

// Exhaustive search cost grows as N^K.
void BM_Oracle(benchmark::State& state) {
  const auto s = generate_scenario(config(static_cast<int>(state.range(0)), 3), 6);
  const PowerParams p;
  for (auto _ : state) benchmark::DoNotOptimize(associate_oracle(s, p));
}
BENCHMARK(BM_Oracle)->DenseRange(4, 8, 2);

void BM_Baselines(benchmark::State& state) {
  const auto s = generate_scenario(config(50, 7), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(associate_rsrp(s));
    benchmark::DoNotOptimize(associate_ga_subsinr(s));
  }
}
BENCHMARK(BM_Baselines);

}  // namespace

// libbenchmark_main.a in the distro package carries LTO bytecode from another compiler build
BENCHMARK_MAIN();
