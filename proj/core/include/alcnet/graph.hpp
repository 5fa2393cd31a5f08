#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "alcnet/tensor.hpp"

namespace alcnet::nn {

/// A trainable tensor with its gradient accumulator.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  Parameter(const Parameter&) = delete;
  Parameter& operator=(const Parameter&) = delete;

  const std::string& name() const { return name_; }
  std::uint64_t id() const { return id_; }

  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  std::size_t size() const { return value_.size(); }

  void zero_grad() { grad_.fill(0.0); }

 private:
  std::string name_;
  std::uint64_t id_;
  Tensor value_;
  Tensor grad_;
};

/// Handle to a node recorded in a Graph.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
  friend bool operator==(Var, Var) = default;
};

enum class OpKind : std::uint8_t {
  Input,
  Param,
  Conv2d,
  BiasAdd,
  BatchNorm,
  Relu,
  Sigmoid,
  Add,
  Sub,
  Mul,
  Max,
  ReduceStack,
  Upsample,
  GlobalAvgPool,
  ExpandSpatial,
  Sum,
  CyclicShift,
  DilatedContrast,
  SoftIouLoss,
};

const char* op_name(OpKind kind);

class Graph;

/// View handed to a node's backward rule: forward values of inputs/output,
/// the incoming gradient, and accumulators for inputs that need gradients
/// (null for inputs that do not).
class BackwardContext {
 public:
  const Tensor& input(std::size_t i) const;
  const Tensor& output() const;
  const Tensor& out_grad() const { return *out_grad_; }
  Tensor* input_grad(std::size_t i) const;
  std::size_t num_inputs() const;

 private:
  friend class Graph;
  BackwardContext(Graph& g, std::uint32_t node, const Tensor* out_grad)
      : graph_(g), node_(node), out_grad_(out_grad) {}
  Graph& graph_;
  std::uint32_t node_;
  const Tensor* out_grad_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

/// Tape of recorded operations. Nodes are appended in evaluation order, so
/// every input precedes its consumer and a reverse sweep is a valid
/// topological order for backpropagation.
class Graph {
 public:
  Graph() = default;
  /// With track_grad false no leaf requires a gradient, so no backward rules
  /// are kept. Used for inference.
  explicit Graph(bool track_grad) : track_grad_(track_grad) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant leaf. With requires_grad the leaf collects a gradient that can
  /// be read back via grad().
  Var input(Tensor value, bool requires_grad = false);

  /// Leaf bound to a Parameter. Repeated calls return the same node so that
  /// fan-out is summed on the node before it reaches the parameter.
  Var param(Parameter& p);

  Var record(OpKind kind, std::vector<Var> inputs, Tensor value,
             BackwardFn backward);

  const Tensor& value(Var v) const { return node(v).value; }
  /// Gradient of the last backward() output w.r.t. v; zero tensor when v was
  /// not reached.
  const Tensor& grad(Var v);
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  OpKind kind(Var v) const { return node(v).kind; }
  const std::vector<Var>& inputs(Var v) const { return node(v).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar node; adds d(out)/d(param) into every
  /// reachable Parameter's grad. Throws if `out` is not a single value.
  void backward(Var out);

 private:
  friend class BackwardContext;

  struct Node {
    OpKind kind;
    std::vector<Var> inputs;
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& ensure_grad(Node& n);

  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, Var> param_nodes_;
  bool track_grad_ = true;
};

}  // namespace alcnet::nn
