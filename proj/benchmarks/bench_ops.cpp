#include <benchmark/benchmark.h>

#include "alcnet/graph.hpp"
#include "alcnet/ops.hpp"
#include "bench_common.hpp"

namespace {

using namespace alcnet;

// Args: spatial size, channels (in = out), stride.
void BM_Conv3x3Forward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const int stride = static_cast<int>(state.range(2));
  const nn::Tensor x = bench::random_tensor({1, c, hw, hw}, 1);
  const nn::Tensor k = bench::random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward(x, k, stride, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.size()));
}
BENCHMARK(BM_Conv3x3Forward)
    ->Args({64, 8, 1})
    ->Args({64, 16, 1})
    ->Args({32, 16, 2})
    ->Args({128, 16, 1})
    ->Unit(benchmark::kMicrosecond);

void BM_Conv3x3ForwardBackward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const int c = static_cast<int>(state.range(1));
  const nn::Tensor x = bench::random_tensor({2, c, hw, hw}, 1);
  nn::Parameter k("k", bench::random_tensor({c, c, 3, 3}, 2));
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var y = nn::conv2d(g, g.input(x, true), g.param(k), 1, 1);
    g.backward(nn::sum(g, y));
    benchmark::DoNotOptimize(g.grad(y));
  }
}
BENCHMARK(BM_Conv3x3ForwardBackward)->Args({64, 8})->Args({32, 16})->Unit(benchmark::kMicrosecond);

void BM_BatchNormTrain(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const nn::Tensor x = bench::random_tensor({4, 16, hw, hw}, 3);
  nn::Parameter gamma("gamma", nn::Tensor({1, 16, 1, 1}, 1.0));
  nn::Parameter beta("beta", nn::Tensor({1, 16, 1, 1}, 0.0));
  nn::BatchNormState bn;
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var y =
        nn::batch_norm(g, g.input(x), g.param(gamma), g.param(beta), bn, nn::Mode::Train);
    benchmark::DoNotOptimize(g.value(y));
  }
}
BENCHMARK(BM_BatchNormTrain)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

}  // namespace
