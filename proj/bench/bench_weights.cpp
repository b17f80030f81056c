// Serial reference vs OpenMP d-step weights on a 22-point ridge-softmax
// instance (16 calibration points, 6 feedback steps).

#include <benchmark/benchmark.h>
#include <omp.h>

#include "mfcs/verify.hpp"

namespace {

const mfcs::WeightInstance& instance() {
  static const mfcs::WeightInstance inst = mfcs::make_weight_instance(16, 6, 2024, 256, 8);
  return inst;
}

void BM_DstepSerial(benchmark::State& state) {
  const auto& inst = instance();
  const auto depth = static_cast<std::size_t>(state.range(0));
  mfcs::WeightOptions options;
  options.max_operations = 1e12;
  for (auto _ : state) {
    auto w = mfcs::mfcs_dstep_weights(inst.points, *inst.evaluator, depth, options);
    benchmark::DoNotOptimize(w);
  }
}

void BM_DstepOpenMP(benchmark::State& state) {
  const auto& inst = instance();
  const auto depth = static_cast<std::size_t>(state.range(0));
  mfcs::WeightOptions options;
  options.max_operations = 1e12;
  for (auto _ : state) {
    auto w = mfcs::mfcs_dstep_weights_omp(inst.points, *inst.evaluator, depth, options, nullptr,
                                          omp_get_max_threads());
    benchmark::DoNotOptimize(w);
  }
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_DstepSerial)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DstepOpenMP)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
