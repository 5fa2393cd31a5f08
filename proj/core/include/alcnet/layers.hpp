#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "alcnet/ops.hpp"

namespace alcnet::nn {

/// Owned parameters and batch-norm buffers of a model, by dotted path.
struct StateRefs {
  std::vector<Parameter*> params;
  std::vector<std::pair<std::string, BatchNormState*>> buffers;
};

/// Bias-free convolution with He-initialised weights.
class Conv2d {
 public:
  Conv2d(const std::string& name, int in_channels, int out_channels,
         int kernel, int stride, std::mt19937_64& rng);

  Var forward(Graph& g, Var x);
  void collect(StateRefs& refs) { refs.params.push_back(weight_.get()); }
  std::size_t num_params() const { return weight_->size(); }
  int stride() const { return stride_; }
  Parameter& weight() { return *weight_; }

 private:
  std::unique_ptr<Parameter> weight_;
  int stride_;
};

class BatchNorm2d {
 public:
  BatchNorm2d(const std::string& name, int channels);

  Var forward(Graph& g, Var x, Mode mode);
  void collect(StateRefs& refs);
  std::size_t num_params() const { return gamma_->size() + beta_->size(); }
  BatchNormState& state() { return *state_; }

 private:
  std::string name_;
  std::unique_ptr<Parameter> gamma_;
  std::unique_ptr<Parameter> beta_;
  std::unique_ptr<BatchNormState> state_;
};

/// Per-channel additive bias, initialised to zero.
class Bias {
 public:
  Bias(const std::string& name, int channels, double init = 0.0);

  Var forward(Graph& g, Var x) { return bias_add(g, x, g.param(*bias_)); }
  void collect(StateRefs& refs) { refs.params.push_back(bias_.get()); }
  std::size_t num_params() const { return bias_->size(); }
  Parameter& bias() { return *bias_; }

 private:
  std::unique_ptr<Parameter> bias_;
};

}  // namespace alcnet::nn
