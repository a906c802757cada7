#include <benchmark/benchmark.h>

#include "srkdiff/gaussian.hpp"
#include "srkdiff/metrics.hpp"
#include "srkdiff/rng.hpp"
#include "srkdiff/samplers.hpp"
#include "srkdiff/schedule.hpp"
#include "srkdiff/sweep.hpp"

namespace {

using namespace srkdiff;

void BM_Coefficients(benchmark::State& state) {
  double delta = 1e-4;
  for (auto _ : state) {
    benchmark::DoNotOptimize(coefficients(delta));
    delta = delta < 0.2 ? delta * 1.0001 : 1e-4;
  }
}
BENCHMARK(BM_Coefficients);

void BM_CorollaryGrid(benchmark::State& state) {
  ScheduleParams p;
  p.d = static_cast<int>(state.range(0));
  p.eps = 0.25;
  p.delta_stop = 0.05;
  for (auto _ : state) benchmark::DoNotOptimize(build_corollary_grid(p));
}
BENCHMARK(BM_CorollaryGrid)->Arg(4)->Arg(16);

void BM_SamplerRun(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const TimeGrid grid = build_uniform_grid(4.0, 100, 0.01);
  GaussianTarget target;
  target.mean = Eigen::VectorXd::Zero(d);
  target.cov_diag = Eigen::VectorXd::Ones(d);
  const auto score = make_analytic_score(TargetSpec(target), 4.0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    SamplerRun run{&grid, SamplerKind::SRK, score.get(), seed++, false};
    benchmark::DoNotOptimize(run_sampler(run));
  }
  state.SetItemsProcessed(state.iterations() * grid.step_count());
}
BENCHMARK(BM_SamplerRun)->Arg(2)->Arg(8);

void BM_ExactOutputLaw(benchmark::State& state) {
  const TimeGrid grid =
      build_uniform_grid(4.0, static_cast<std::size_t>(state.range(0)), 0.01);
  GaussianTarget target;
  target.mean = Eigen::VectorXd::Zero(4);
  target.cov_diag = Eigen::VectorXd::Constant(4, 0.25);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        exact_output_law(grid, SamplerKind::SRK, target));
  state.SetItemsProcessed(state.iterations() * grid.step_count());
}
BENCHMARK(BM_ExactOutputLaw)->Arg(64)->Arg(1024);

void BM_EnergyDistance(benchmark::State& state) {
  const long n = state.range(0);
  Eigen::MatrixXd a(n, 2), b(n, 2);
  const NoiseStream draw(1, 0);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) {
      a(i, j) = draw.normal(static_cast<std::uint64_t>(4 * i + j));
      b(i, j) = draw.normal(static_cast<std::uint64_t>(4 * i + 2 + j)) + 0.5;
    }
  const SampleSet sa{a, "a"}, sb{b, "b"};
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(sa, sb));
}
BENCHMARK(BM_EnergyDistance)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
