#include "alcnet/graph.hpp"

#include <atomic>
#include <stdexcept>

namespace alcnet::nn {

namespace {
std::atomic<std::uint64_t> next_parameter_id{1};
}

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)),
      id_(next_parameter_id.fetch_add(1)),
      value_(std::move(value)),
      grad_(value_.shape(), 0.0) {}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Param: return "param";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::BiasAdd: return "bias_add";
    case OpKind::BatchNorm: return "batch_norm";
    case OpKind::Relu: return "relu";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Max: return "max";
    case OpKind::ReduceStack: return "reduce_stack";
    case OpKind::Upsample: return "upsample";
    case OpKind::GlobalAvgPool: return "global_avg_pool";
    case OpKind::ExpandSpatial: return "expand_spatial";
    case OpKind::Sum: return "sum";
    case OpKind::CyclicShift: return "cyclic_shift";
    case OpKind::DilatedContrast: return "dilated_contrast";
    case OpKind::SoftIouLoss: return "soft_iou_loss";
  }
  return "unknown";
}

const Tensor& BackwardContext::input(std::size_t i) const {
  return graph_.node(graph_.nodes_[node_].inputs[i]).value;
}

const Tensor& BackwardContext::output() const {
  return graph_.nodes_[node_].value;
}

Tensor* BackwardContext::input_grad(std::size_t i) const {
  auto& in = graph_.node(graph_.nodes_[node_].inputs[i]);
  if (!in.requires_grad) return nullptr;
  return &graph_.ensure_grad(in);
}

std::size_t BackwardContext::num_inputs() const {
  return graph_.nodes_[node_].inputs.size();
}

Graph::Node& Graph::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size())
    throw std::out_of_range("graph: invalid variable handle");
  return nodes_[v.id];
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size())
    throw std::out_of_range("graph: invalid variable handle");
  return nodes_[v.id];
}

Tensor& Graph::ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Var Graph::input(Tensor value, bool requires_grad) {
  Node n{OpKind::Input, {}, std::move(value), {}, nullptr, nullptr,
         requires_grad && track_grad_};
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::param(Parameter& p) {
  if (auto it = param_nodes_.find(p.id()); it != param_nodes_.end())
    return it->second;
  Node n{OpKind::Param, {}, p.value(), {}, nullptr, &p, track_grad_};
  nodes_.push_back(std::move(n));
  Var v{static_cast<std::uint32_t>(nodes_.size() - 1)};
  param_nodes_.emplace(p.id(), v);
  return v;
}

Var Graph::record(OpKind kind, std::vector<Var> inputs, Tensor value,
                  BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) needs = needs || node(in).requires_grad;
  Node n{kind, std::move(inputs), std::move(value), {},
         needs ? std::move(backward) : BackwardFn{}, nullptr, needs};
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Graph::grad(Var v) { return ensure_grad(node(v)); }

void Graph::backward(Var out) {
  Node& root = node(out);
  if (root.value.size() != 1)
    throw std::invalid_argument(
        "backward: output must be a scalar, got shape " +
        root.value.shape().str());
  for (auto& n : nodes_) n.grad = Tensor{};
  ensure_grad(root).fill(1.0);

  for (std::uint32_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.param != nullptr) {
      n.param->grad() += n.grad;
      continue;
    }
    if (n.backward) {
      BackwardContext ctx(*this, id, &n.grad);
      n.backward(ctx);
    }
  }
}

}  // namespace alcnet::nn
