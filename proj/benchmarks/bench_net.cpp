#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "alcnet/graph.hpp"
#include "alcnet/net.hpp"
#include "alcnet/objective.hpp"
#include "bench_common.hpp"

namespace {

using namespace alcnet;

const std::vector<std::string> kArchs{"alcnet", "fpn"};

net::Network make_net(const std::string& name, int blocks) {
  return net::Network(net::named_arch(name, blocks, net::Profile::Desk),
                      net::BackboneConfig::for_profile(net::Profile::Desk, blocks), 1);
}

// Args: arch index, residual blocks per stage.
void BM_NetworkInference(benchmark::State& state) {
  const std::string& name = kArchs[static_cast<std::size_t>(state.range(0))];
  net::Network model = make_net(name, static_cast<int>(state.range(1)));
  const nn::Tensor x = bench::random_tensor({1, 1, 64, 64}, 2);
  {
    nn::Graph warm;
    model.forward(warm, warm.input(bench::random_tensor({2, 1, 64, 64}, 3)), nn::Mode::Train);
  }
  state.SetLabel(name);
  for (auto _ : state) {
    nn::Graph g(false);
    benchmark::DoNotOptimize(g.value(model.forward(g, g.input(x), nn::Mode::Eval)));
  }
}
BENCHMARK(BM_NetworkInference)->ArgsProduct({{0, 1}, {1, 3}})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const std::string& name = kArchs[static_cast<std::size_t>(state.range(0))];
  net::Network model = make_net(name, 1);
  const nn::Tensor x = bench::random_tensor({4, 1, 64, 64}, 4);
  nn::Tensor y({4, 1, 64, 64});
  for (int n = 0; n < 4; ++n)
    for (int i = 30; i < 33; ++i)
      for (int j = 30; j < 33; ++j) y.at(n, 0, i, j) = 1.0;
  state.SetLabel(name);
  for (auto _ : state) {
    nn::Graph g;
    const nn::Var scores = model.forward(g, g.input(x), nn::Mode::Train);
    const nn::Var loss =
        objective::soft_iou_loss(g, nn::activation(g, scores, nn::Activation::Sigmoid), y);
    g.backward(loss);
    benchmark::DoNotOptimize(g.value(loss));
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
