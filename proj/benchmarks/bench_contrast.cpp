#include <benchmark/benchmark.h>

#include "alcnet/contrast.hpp"
#include "alcnet/graph.hpp"
#include "bench_common.hpp"

namespace {

using namespace alcnet;

void BM_CyclicShift(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const nn::Tensor x = bench::random_tensor({1, 16, hw, hw}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(contrast::cyclic_shift(x, {-3, 2}));
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(x.size() * sizeof(double)));
}
BENCHMARK(BM_CyclicShift)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

// Args: spatial size, dilation.
void BM_DlcRaw(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const nn::Tensor x = bench::random_tensor({1, 16, hw, hw}, 2);
  const int d = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(contrast::dlc(x, d));
}
BENCHMARK(BM_DlcRaw)->Args({64, 2})->Args({64, 13})->Args({128, 17})->Unit(benchmark::kMicrosecond);

void BM_DlcFusedForwardBackward(benchmark::State& state) {
  const nn::Tensor x = bench::random_tensor({2, 16, 64, 64}, 3);
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var in = g.input(x, true);
    g.backward(nn::sum(g, contrast::dlc(g, in, 2)));
    benchmark::DoNotOptimize(g.grad(in));
  }
}
BENCHMARK(BM_DlcFusedForwardBackward)->Unit(benchmark::kMicrosecond);

// Same computation built from shift, subtract and multiply nodes.
void BM_DlcComposedForwardBackward(benchmark::State& state) {
  const nn::Tensor x = bench::random_tensor({2, 16, 64, 64}, 3);
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var in = g.input(x, true);
    std::vector<nn::Var> dirs;
    for (const auto dir : contrast::canonical_directions(2))
      dirs.push_back(contrast::directional_contrast(g, in, dir));
    g.backward(nn::sum(g, nn::reduce_over_stack(g, dirs, nn::Reduction::Min)));
    benchmark::DoNotOptimize(g.grad(in));
  }
}
BENCHMARK(BM_DlcComposedForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_Mlc(benchmark::State& state) {
  const nn::Tensor x = bench::random_tensor({1, 16, 64, 64}, 4);
  const contrast::DilationSet rates({2, 3});
  for (auto _ : state) benchmark::DoNotOptimize(contrast::mlc(x, rates));
}
BENCHMARK(BM_Mlc)->Unit(benchmark::kMicrosecond);

// Args: frame size, implementation (0 dense kernel, 1 cyclic).
void BM_Mpcm(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const GrayImage frame = bench::random_frame(hw, hw, 5);
  contrast::MpcmConfig cfg;
  cfg.impl = state.range(1) == 0 ? contrast::MpcmImpl::Kernel : contrast::MpcmImpl::Cyclic;
  state.SetLabel(contrast::to_string(cfg.impl));
  for (auto _ : state) benchmark::DoNotOptimize(contrast::mpcm_detect(frame, cfg));
}
BENCHMARK(BM_Mpcm)
    ->ArgsProduct({{64, 128, 256}, {0, 1}})
    ->Unit(benchmark::kMillisecond);

}  // namespace
