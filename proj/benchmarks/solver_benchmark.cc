#include <benchmark/benchmark.h>

#include "covbal/balance2.h"
#include "covbal/oracle.h"

namespace {

covbal::Dataset Instance(int64_t scale) {
  // n' = 10 n, k levels per covariate with k^2 close to n.
  int k = 1;
  while (static_cast<int64_t>(k + 1) * (k + 1) <= scale) ++k;
  return covbal::oracle::RandomInstance(2, scale, 10 * scale, {k, k}, 8);
}

void BM_SolveMaxFlow2(benchmark::State& state) {
  const covbal::Dataset d = Instance(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(covbal::balance2::SolveMaxFlow2(d, d.n()).objective);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveMaxFlow2)->RangeMultiplier(10)->Range(100, 10000)
    ->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveMcnf2(benchmark::State& state) {
  const covbal::Dataset d = Instance(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(covbal::balance2::SolveMcnf2(d, d.n()).objective);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveMcnf2)->RangeMultiplier(10)->Range(100, 10000)
    ->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace

BENCHMARK_MAIN();
