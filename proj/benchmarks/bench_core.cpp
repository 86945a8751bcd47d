#include <benchmark/benchmark.h>

#include "chainscat/haar.hpp"
#include "chainscat/multi_channel.hpp"
#include "chainscat/single_channel.hpp"
#include "chainscat/smatrix.hpp"

using namespace chainscat;

static void BM_Compose(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  HaarSampler haar(d, 1);
  const auto gen = haar.next();
  auto chain = haar.next();
  for (auto _ : state) {
    chain = compose(chain, gen);
    benchmark::DoNotOptimize(chain);
  }
}
BENCHMARK(BM_Compose)->Arg(1)->Arg(4)->Arg(16);

static void BM_SToT(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  HaarSampler haar(d, 2);
  const auto s = haar.next();
  for (auto _ : state) benchmark::DoNotOptimize(s_to_t(s));
}
BENCHMARK(BM_SToT)->Arg(1)->Arg(4)->Arg(16);

static void BM_HaarClassify(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  HaarSampler haar(d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(classify(haar.next()));
}
BENCHMARK(BM_HaarClassify)->Arg(2)->Arg(8)->Arg(16);

static void BM_StaticStep(benchmark::State& state) {
  const auto gen = SingleChannelParams::from_lambda(0.5, 0.628319);
  auto st = ChainState1D::from_static(0.3, 1.0, gen);
  for (auto _ : state) {
    st = static_step(st, gen);
    benchmark::DoNotOptimize(st);
  }
}
BENCHMARK(BM_StaticStep);
BENCHMARK_MAIN();
