#include <benchmark/benchmark.h>

#include "serc/experiment.hpp"

namespace {

const serc::KnowledgeBase& kb() {
  static const auto k = serc::KnowledgeBase::load(SERC_SOURCE_DIR "/data/bio.kb");
  return k;
}

serc::EpisodeConfig config(bool parallel_checks) {
  serc::EpisodeConfig cfg;
  cfg.mixed_noise = true;
  cfg.pipeline.parallel_checks = parallel_checks ? 4 : 1;
  return cfg;
}

void BM_SimulateSerial(benchmark::State& state) {
  auto cfg = config(false);
  for (auto _ : state) benchmark::DoNotOptimize(serc::simulate_serial(kb(), cfg, 42, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SimulateParallel(benchmark::State& state) {
  auto cfg = config(false);
  for (auto _ : state)
    benchmark::DoNotOptimize(serc::simulate_parallel(kb(), cfg, 42, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ParallelChecks(benchmark::State& state) {
  auto cfg = config(true);
  cfg.pipeline.density = serc::Density::High;
  for (auto _ : state) benchmark::DoNotOptimize(serc::simulate_serial(kb(), cfg, 42, static_cast<int>(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParallelChecks)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
