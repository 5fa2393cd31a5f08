#pragma once

#include <span>

#include "alcnet/graph.hpp"

namespace alcnet::nn {

enum class Mode { Train, Eval };
enum class Reduction { Min, Max };
enum class Activation { Relu, Sigmoid };
enum class Elementwise { Add, Sub, Mul, Max };

/// Running statistics owned by a batch-norm layer.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  bool initialized = false;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// ---------------------------------------------------------------------------
// Raw kernels (no tape). The graph ops below call these for their forward.
// ---------------------------------------------------------------------------

/// Zero-padded cross-correlation, kernel laid out Cout×Cin×k×k.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, int stride,
                      int padding);
int conv_output_size(int in, int k, int stride, int padding);

Tensor upsample_nearest_forward(const Tensor& input, int factor);
Tensor reduce_stack_forward(std::span<const Tensor* const> stack,
                            Reduction kind,
                            std::vector<std::uint8_t>* argext = nullptr);

// ---------------------------------------------------------------------------
// Differentiable ops
// ---------------------------------------------------------------------------

/// padding must equal k/2; output is ceil(H/stride) × ceil(W/stride).
Var conv2d(Graph& g, Var input, Var kernel, int stride, int padding);
Var conv2d(Graph& g, Var input, Var kernel, int stride);

/// Adds a per-channel bias shaped 1×C×1×1.
Var bias_add(Graph& g, Var input, Var bias);

/// Per-channel normalisation. Train mode uses moments over batch and spatial
/// positions and updates `state`; Eval mode reads `state` and throws
/// "uninitialized running stats" when no train step has populated it.
Var batch_norm(Graph& g, Var input, Var gamma, Var beta, BatchNormState& state,
               Mode mode);

Var activation(Graph& g, Var input, Activation kind);
inline Var relu(Graph& g, Var x) { return activation(g, x, Activation::Relu); }
inline Var sigmoid(Graph& g, Var x) {
  return activation(g, x, Activation::Sigmoid);
}

/// Same-shape element-wise op. Max routes the gradient to the larger operand,
/// ties to `a`.
Var elementwise(Graph& g, Var a, Var b, Elementwise kind);
inline Var add(Graph& g, Var a, Var b) {
  return elementwise(g, a, b, Elementwise::Add);
}
inline Var sub(Graph& g, Var a, Var b) {
  return elementwise(g, a, b, Elementwise::Sub);
}
inline Var mul(Graph& g, Var a, Var b) {
  return elementwise(g, a, b, Elementwise::Mul);
}
inline Var maximum(Graph& g, Var a, Var b) {
  return elementwise(g, a, b, Elementwise::Max);
}

/// Per-position min/max across a stack of same-shape maps; the gradient goes
/// to the lowest index attaining the extremum.
Var reduce_over_stack(Graph& g, std::span<const Var> stack, Reduction kind);

Var upsample_nearest(Graph& g, Var input, int factor);

/// N×C×H×W -> N×C×1×1 spatial mean.
Var global_avg_pool(Graph& g, Var input);

/// Broadcast an N×C×1×1 map over an H×W grid.
Var expand_spatial(Graph& g, Var input, int height, int width);

/// Sum of all elements as a 1×1×1×1 scalar.
Var sum(Graph& g, Var input);

}  // namespace alcnet::nn
