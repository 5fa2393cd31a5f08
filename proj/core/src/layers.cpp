#include "alcnet/layers.hpp"

#include "alcnet/objective.hpp"

namespace alcnet::nn {

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels,
               int kernel, int stride, std::mt19937_64& rng)
    : weight_(std::make_unique<Parameter>(
          name + ".weight",
          objective::he_normal(Shape{out_channels, in_channels, kernel, kernel},
                               rng))),
      stride_(stride) {}

Var Conv2d::forward(Graph& g, Var x) {
  return conv2d(g, x, g.param(*weight_), stride_);
}

BatchNorm2d::BatchNorm2d(const std::string& name, int channels)
    : name_(name),
      gamma_(std::make_unique<Parameter>(name + ".gamma",
                                         Tensor(Shape{1, channels, 1, 1}, 1.0))),
      beta_(std::make_unique<Parameter>(name + ".beta",
                                        Tensor(Shape{1, channels, 1, 1}, 0.0))),
      state_(std::make_unique<BatchNormState>()) {}

Var BatchNorm2d::forward(Graph& g, Var x, Mode mode) {
  return batch_norm(g, x, g.param(*gamma_), g.param(*beta_), *state_, mode);
}

void BatchNorm2d::collect(StateRefs& refs) {
  refs.params.push_back(gamma_.get());
  refs.params.push_back(beta_.get());
  refs.buffers.emplace_back(name_, state_.get());
}

Bias::Bias(const std::string& name, int channels, double init)
    : bias_(std::make_unique<Parameter>(name + ".bias",
                                        Tensor(Shape{1, channels, 1, 1}, init))) {}

}  // namespace alcnet::nn
