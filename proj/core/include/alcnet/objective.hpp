#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "alcnet/graph.hpp"

namespace alcnet::objective {

using nn::Graph;
using nn::Parameter;
using nn::Shape;
using nn::Tensor;
using nn::Var;

/// Optimisation recipe; defaults follow the reference training setup.
struct TrainConfig {
  double lr = 0.1;
  int epochs = 400;
  double weight_decay = 1e-4;
  int batch_size = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Zero-mean normal weights with variance 2 / fan_in, fan_in = Cin·k·k.
Tensor he_normal(Shape kernel_shape, std::mt19937_64& rng);
Tensor he_init(Shape kernel_shape, std::uint64_t seed);

/// Σ p·y / Σ (p + y − p·y) over one map. Both sums zero (empty prediction and
/// empty ground truth) counts as perfect agreement and returns 1.
double soft_iou(std::span<const double> p, std::span<const double> y);

/// Σ over the batch of (1 − soft_iou) per sample. `probs` holds N×1×H×W
/// probabilities in [0, 1]; `target` the matching binary masks. Samples whose
/// denominator vanishes contribute 0 loss and 0 gradient.
Var soft_iou_loss(Graph& g, Var probs, const Tensor& target);

/// Plain-tensor version of soft_iou_loss.
double training_loss(const Tensor& probs, const Tensor& target);

/// acc += g²; θ −= lr·g / (√acc + eps) after folding in g += wd·θ.
class AdaGrad {
 public:
  AdaGrad(std::vector<Parameter*> params, double lr, double weight_decay,
          double eps = 1e-10);

  /// Applies one update from the parameters' current gradients. Throws
  /// std::runtime_error naming the parameter if a gradient is not finite.
  void step();
  void zero_grad();

  const Tensor& accumulator(std::size_t i) const { return acc_[i]; }
  std::size_t size() const { return params_.size(); }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> acc_;
  double lr_;
  double weight_decay_;
  double eps_;
};

}  // namespace alcnet::objective
