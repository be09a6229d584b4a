// Microbenchmarks for the hot paths: training, per-sample attribution,
// distance, and the RMSLE monitor. Run with --benchmark_min_time=... to
// tighten noise; defaults are fine for spotting regressions.

#include <benchmark/benchmark.h>

#include <vector>

#include "ridecast/geo.hpp"
#include "ridecast/gbt.hpp"
#include "ridecast/metrics.hpp"
#include "ridecast/shap.hpp"
#include "../tests/testutil.hpp"

namespace {

using namespace ridecast;

Dataset bench_dataset(std::size_t n, std::size_t m) {
  SplitMix64 rng(7);
  return testutil::random_dataset(rng, n, m);
}

void BM_TrainBoostedTrees(benchmark::State& state) {
  const Dataset d = bench_dataset(static_cast<std::size_t>(state.range(0)), 18);
  TrainConfig c;
  c.max_depth = 6;
  c.eta = 0.1;
  c.num_rounds = 50;
  c.early_stopping_patience = 0;
  for (auto _ : state) {
    Ensemble model = train(d, c);
    benchmark::DoNotOptimize(model.base_score);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}
BENCHMARK(BM_TrainBoostedTrees)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_TreeShapPerSample(benchmark::State& state) {
  SplitMix64 rng(11);
  Ensemble model = testutil::random_ensemble(rng, 18, static_cast<int>(state.range(0)), 200);
  const auto x = testutil::random_sample(rng, 18);
  for (auto _ : state) {
    auto phi = tree_shap(model, x);
    benchmark::DoNotOptimize(phi.data());
  }
}
BENCHMARK(BM_TreeShapPerSample)->Arg(4)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_Haversine(benchmark::State& state) {
  double lat = 40.7536, lon = -73.9772;
  for (auto _ : state) {
    benchmark::DoNotOptimize(haversine_gcd(lat, lon, 40.7411, -73.9897));
    lat += 1e-7;  // defeat constant folding
    lon -= 1e-7;
  }
}
BENCHMARK(BM_Haversine);

void BM_Rmsle(benchmark::State& state) {
  const Dataset d = bench_dataset(static_cast<std::size_t>(state.range(0)), 4);
  std::vector<double> yhat(d.y);
  for (double& v : yhat) v *= 1.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rmsle(d.y, yhat));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rmsle)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
