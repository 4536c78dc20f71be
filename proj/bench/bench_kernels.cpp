// OpenMP ladder kernel against the serial reference, per seed batch.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "heavysum/kernels.hpp"
#include "heavysum/observable.hpp"

using namespace heavysum;

namespace {

LadderJob make_job(int k_max) {
  LadderJob job;
  job.x = 0.3478103;
  job.s = 0.5;
  job.k_min = 14;
  job.k_max = k_max;
  job.master_seed = 7;
  job.d_floor = job.distance_for(0.1 * normalizer(static_cast<double>(job.horizon(0)), 0.5, 1.5));
  return job;
}

void BM_LadderParallel(benchmark::State& state) {
  auto job = make_job(static_cast<int>(state.range(0)));
  const auto seeds = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_ladder(job, seeds));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds * job.horizon(job.rungs() - 1)));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_LadderSerial(benchmark::State& state) {
  auto job = make_job(static_cast<int>(state.range(0)));
  const auto seeds = static_cast<std::size_t>(state.range(1));
  for (auto _ : state)
    for (std::size_t i = 0; i < seeds; ++i) benchmark::DoNotOptimize(run_ladder_serial(job, i));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds * job.horizon(job.rungs() - 1)));
}

}  // namespace

BENCHMARK(BM_LadderParallel)->Args({18, 8})->Args({20, 8})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LadderSerial)->Args({18, 8})->Args({20, 8})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
