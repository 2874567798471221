// Serial reference against the OpenMP kernels. The parallel variants should
// match the serial output exactly; this only measures time.

#include <benchmark/benchmark.h>

#include <vector>

#include "qpyramid/lab.hpp"
#include "qpyramid/priors.hpp"
#include "qpyramid/sampler.hpp"
#include "qpyramid/summaries.hpp"

using namespace qpyramid;

namespace {

const std::vector<DyadicQuantileVector>& prior_draws() {
  static const auto draws = lab::sample_prior_many(PriorSpec::parse("beta:c=2.5", 7), 4000, 3);
  return draws;
}

const Dataset& chain_data() {
  static const Dataset data = [] {
    Rng rng(8);
    return Dataset(lab::TrueLaw::y_squared().sample(1000, rng));
  }();
  return data;
}

void BM_summary_parallel(benchmark::State& state) {
  const auto grid = default_grid(512);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_summary(prior_draws(), grid, 0.05));
}

void BM_summary_serial(benchmark::State& state) {
  const auto grid = default_grid(512);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_summary_serial(prior_draws(), grid, 0.05));
}

ChainConfig bench_chain() {
  ChainConfig cfg;
  cfg.iterations = 1000;
  return cfg;
}

void BM_chains_parallel(benchmark::State& state) {
  const auto spec = PriorSpec::uniform(5);
  for (auto _ : state) benchmark::DoNotOptimize(run_chains(bench_chain(), chain_data(), spec, 4));
}

void BM_chains_serial(benchmark::State& state) {
  const auto spec = PriorSpec::uniform(5);
  for (auto _ : state) benchmark::DoNotOptimize(run_chains_serial(bench_chain(), chain_data(), spec, 4));
}

void BM_prior_draws_parallel(benchmark::State& state) {
  const auto spec = PriorSpec::parse("beta:c=2.5", 9);
  for (auto _ : state) benchmark::DoNotOptimize(lab::sample_prior_many(spec, 2000, 1));
}

void BM_prior_draws_serial(benchmark::State& state) {
  const auto spec = PriorSpec::parse("beta:c=2.5", 9);
  for (auto _ : state) benchmark::DoNotOptimize(lab::sample_prior_many_serial(spec, 2000, 1));
}

void BM_delta_decay_parallel(benchmark::State& state) {
  lab::DeltaDecayOptions o;
  o.replicates = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(lab::delta_decay_experiment(o));
}

void BM_delta_decay_serial(benchmark::State& state) {
  lab::DeltaDecayOptions o;
  o.replicates = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(lab::delta_decay_experiment_serial(o));
}

}  // namespace

BENCHMARK(BM_summary_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_summary_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_chains_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_chains_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_prior_draws_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_prior_draws_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_delta_decay_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_delta_decay_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
