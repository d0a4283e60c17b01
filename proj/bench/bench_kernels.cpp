// Serial reference vs OpenMP kernels on a single long path.

#include <benchmark/benchmark.h>

#include <vector>

#include "tlpvol/jump_diffusion_sim.hpp"
#include "tlpvol/mc_lab.hpp"
#include "tlpvol/threshold_regression.hpp"

using namespace tlpvol;

namespace {

const Path& shared_path(std::size_t n) {
  static std::size_t cached_n = 0;
  static Path path;
  if (cached_n != n) {
    ModelSpec m;
    m.drift = [](double x) { return -x; };
    m.diffusion = [](double) { return 1.0; };
    path = simulate_path(m, n, 1.0, 42);
    cached_n = n;
  }
  return path;
}

std::vector<double> grid(int count) {
  std::vector<double> xs(count);
  for (int i = 0; i < count; ++i) xs[i] = -1.0 + 2.0 * i / (count - 1);
  return xs;
}

const KernelSpec kEpa = KernelSpec::one_sided_epanechnikov();

void BM_moments_serial(benchmark::State& state) {
  const Path& p = shared_path(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(serial::accumulate_moments(p, 0.0, 0.2, kEpa, 0.01, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_moments_parallel(benchmark::State& state) {
  const Path& p = shared_path(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_moments(p, 0.0, 0.2, kEpa, 0.01, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_grid_serial(benchmark::State& state) {
  const Path& p = shared_path(state.range(0));
  const auto xs = grid(64);
  for (auto _ : state)
    benchmark::DoNotOptimize(serial::estimate_grid(p, xs, 0.2, kEpa, 0.01, Estimator{}));
}

void BM_grid_parallel(benchmark::State& state) {
  const Path& p = shared_path(state.range(0));
  const auto xs = grid(64);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_grid(p, xs, 0.2, kEpa, 0.01, Estimator{}));
}

void mc(benchmark::State& state, bool parallel) {
  ExperimentConfig c;
  c.model.drift = [](double x) { return -x; };
  c.model.diffusion = [](double) { return 1.0; };
  c.n = 2000;
  c.replications = 64;
  c.x_points = {0.0};
  c.bandwidth = 0.2;
  c.parallel = parallel;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c));
}

void BM_mc_serial(benchmark::State& state) { mc(state, false); }
void BM_mc_parallel(benchmark::State& state) { mc(state, true); }

}  // namespace

BENCHMARK(BM_moments_serial)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_moments_parallel)->Arg(100000)->Arg(1000000);
BENCHMARK(BM_grid_serial)->Arg(100000);
BENCHMARK(BM_grid_parallel)->Arg(100000);
BENCHMARK(BM_mc_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
