#include <benchmark/benchmark.h>
#include <clustfolio/portfolio.hpp>

#include "support/synthetic.hpp"

using namespace clustfolio;

static void BM_Tangency(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ReturnsPanel panel = fixtures::iid_panel(n, 252, 21);
  for (auto _ : state) {
    const MomentEstimates m = estimate_moments(panel, 252);
    benchmark::DoNotOptimize(tangency_weights(m));
  }
}
BENCHMARK(BM_Tangency)->Arg(2)->Arg(10)->Arg(50)->Arg(200);

static void BM_GroupReturns(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ReturnsPanel panel = fixtures::iid_panel(n, 1512, 22);
  std::vector<std::size_t> labels(n);
  for (std::size_t j = 0; j < n; ++j) labels[j] = j % 10;
  const Grouping g = Grouping::from_labels(labels);
  for (auto _ : state) benchmark::DoNotOptimize(group_returns(panel.returns(), g));
}
BENCHMARK(BM_GroupReturns)->Arg(50)->Arg(500);

static void BM_BootstrapSe(benchmark::State& state) {
  const ReturnsPanel panel = fixtures::iid_panel(1, 1259, 23);
  const std::vector<double> r(panel.returns().data(), panel.returns().data() + panel.rows());
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_sharpe_se(r, static_cast<std::size_t>(state.range(0)), 8));
}
BENCHMARK(BM_BootstrapSe)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
