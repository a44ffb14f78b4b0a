#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "uafkit/analysis.hpp"
#include "uafkit/datasets.hpp"
#include "uafkit/fitter.hpp"
#include "uafkit/network.hpp"
#include "uafkit/uaf.hpp"

namespace {

using namespace uafkit;

std::vector<double> inputs(std::size_t n) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<double> xs(n);
  for (double& x : xs) x = u(rng);
  return xs;
}

void BM_EvalStable(benchmark::State& state) {
  const UafParams p = preset(PresetKind::Tanh);
  const std::vector<double> xs = inputs(4096);
  for (auto _ : state) {
    double sum = 0.0;
    for (double x : xs) sum += eval_stable(p, x);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_EvalStable);

void BM_EvalNaive(benchmark::State& state) {
  const UafParams p = preset(PresetKind::Tanh);
  const std::vector<double> xs = inputs(4096);
  for (auto _ : state) {
    double sum = 0.0;
    for (double x : xs) sum += eval_naive(p, x);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_EvalNaive);

void BM_Grad(benchmark::State& state) {
  const UafParams p{1.3, 0.2, 0.15, -0.6, 0.05};
  const std::vector<double> xs = inputs(4096);
  for (auto _ : state) {
    double sum = 0.0;
    for (double x : xs) {
      const UafGradient g = grad(p, x);
      sum += g.d_x + g.d_A + g.d_B + g.d_C + g.d_D;
    }
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_Grad);

void BM_ErrorReport(benchmark::State& state) {
  const UafParams p = preset(PresetKind::Gaussian);
  for (auto _ : state) {
    benchmark::DoNotOptimize(error_report(p, PresetKind::Gaussian, Interval{}));
  }
}
BENCHMARK(BM_ErrorReport)->Unit(benchmark::kMillisecond);

void BM_RmseTable(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(rmse_table(static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_RmseTable)->Arg(2001)->Arg(20001)->Unit(benchmark::kMillisecond);

void BM_FitBuiltin(benchmark::State& state, const char* name) {
  const FitSpec spec = builtin_fit_spec(name);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(spec));
  }
}
BENCHMARK_CAPTURE(BM_FitBuiltin, sigmoid, "sigmoid-family")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_FitBuiltin, tanh, "tanh-family")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_FitBuiltin, gaussian, "gaussian-family")->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Dataset data = make_gas_analogue(1);
  NetworkConfig config;
  config.layer_sizes = {64, 100, 9};
  config.use_batch_norm = {true};
  config.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train(config, data));
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
