#include <benchmark/benchmark.h>

#include <cstdint>

#include "expertsim/detstream.hpp"
#include "expertsim/estimator.hpp"
#include "expertsim/loss_model.hpp"
#include "expertsim/protocols.hpp"

namespace {

using namespace expertsim;

void BM_SampleExponential(benchmark::State& state) {
  std::uint64_t k = 0;
  double acc = 0.0;
  for (auto _ : state) {
    acc += sample_exponential(42, StreamKey{StreamRole::kVerify, k++});
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_SampleExponential);

void BM_GeoEstimatorDraw(benchmark::State& state) {
  const int copies = static_cast<int>(state.range(0));
  const double p = 3.0 / copies;
  std::uint64_t k = 0;
  double acc = 0.0;
  for (auto _ : state) {
    double log_sum = 0.0;
    for (int b = 1; b <= copies; ++b) {
      const double e = sample_exponential(
          42, StreamKey{StreamRole::kVerify, k, 0, 0, static_cast<std::uint64_t>(b)});
      log_sum += std::log(e);
    }
    acc += std::exp(-log_sum / (copies * p));
    ++k;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_GeoEstimatorDraw)->Arg(1)->Arg(2)->Arg(3);

void BM_LpAggregate(benchmark::State& state) {
  const auto tensor = gen_range_instance(16, 8, 256, 1.0, 5.0, 0.5, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lp_aggregate(tensor, 2.0));
  }
}
BENCHMARK(BM_LpAggregate);

void BM_SimpleRun(benchmark::State& state) {
  const auto horizon = state.range(0);
  const auto tensor = gen_range_instance(16, 4, horizon, 1.0, 5.0, 0.5, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simple(tensor, 2.0, 11));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_SimpleRun)->Arg(256)->Arg(2048);

void BM_TradeoffRun(benchmark::State& state) {
  const auto horizon = state.range(0);
  const auto tensor = gen_range_instance(16, 4, horizon, 1.0, 5.0, 0.5, 7);
  const double r = 8.0 / std::sqrt(static_cast<double>(horizon));  // rho = 1/64
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_tradeoff(tensor, 2.0, r, 11));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_TradeoffRun)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
