#include "alcnet/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "alcnet/log.hpp"

namespace alcnet::objective {

void TrainConfig::validate() const {
  if (!(lr > 0) || epochs < 1 || !(weight_decay >= 0) || batch_size < 1)
    throw std::invalid_argument(
        "train config: lr, epochs and batch_size must be positive and "
        "weight_decay non-negative");
}

Tensor he_normal(Shape kernel_shape, std::mt19937_64& rng) {
  const int fan_in = kernel_shape.c * kernel_shape.h * kernel_shape.w;
  if (fan_in < 1) throw std::invalid_argument("he_normal: fan_in < 1");
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  Tensor t(kernel_shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

Tensor he_init(Shape kernel_shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return he_normal(kernel_shape, rng);
}

namespace {

struct IouSums {
  double inter = 0.0;
  double uni = 0.0;
};

IouSums iou_sums(const double* p, const double* y, std::size_t n) {
  IouSums s;
  for (std::size_t i = 0; i < n; ++i) {
    const double py = p[i] * y[i];
    s.inter += py;
    s.uni += p[i] + y[i] - py;
  }
  return s;
}

void check_loss_inputs(const Tensor& p, const Tensor& y) {
  nn::require_same_shape(p.shape(), y.shape(), "soft_iou_loss");
  for (double v : y.values())
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("soft_iou_loss: target must be binary");
  for (double v : p.values())
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("soft_iou_loss: probabilities must lie in [0,1]");
}

}  // namespace

double soft_iou(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size())
    throw std::invalid_argument("soft_iou: size mismatch");
  const auto s = iou_sums(p.data(), y.data(), p.size());
  if (s.uni == 0.0) {
    log::debug("soft_iou: empty prediction and target, returning 1");
    return 1.0;
  }
  return s.inter / s.uni;
}

double training_loss(const Tensor& probs, const Tensor& target) {
  check_loss_inputs(probs, target);
  const std::size_t per = probs.size() / probs.batch();
  double loss = 0.0;
  for (int n = 0; n < probs.batch(); ++n) {
    const auto s = iou_sums(probs.plane(n, 0), target.plane(n, 0), per);
    loss += s.uni == 0.0 ? 0.0 : 1.0 - s.inter / s.uni;
  }
  return loss;
}

Var soft_iou_loss(Graph& g, Var probs, const Tensor& target) {
  const Tensor& p = g.value(probs);
  const double loss = training_loss(p, target);
  return g.record(
      nn::OpKind::SoftIouLoss, {probs}, Tensor(Shape{1, 1, 1, 1}, loss),
      [target](const nn::BackwardContext& ctx) {
        const Tensor& p = ctx.input(0);
        Tensor& gp = *ctx.input_grad(0);
        const double up = ctx.out_grad()[0];
        const std::size_t per = p.size() / p.batch();
        for (int n = 0; n < p.batch(); ++n) {
          const double* pp = p.plane(n, 0);
          const double* yy = target.plane(n, 0);
          const auto s = iou_sums(pp, yy, per);
          if (s.uni == 0.0) continue;
          double* out = gp.plane(n, 0);
          const double inv2 = 1.0 / (s.uni * s.uni);
          // d(1 - I/U)/dp = -(y·U - I·(1 - y)) / U²
          for (std::size_t i = 0; i < per; ++i)
            out[i] -= up * (yy[i] * s.uni - s.inter * (1.0 - yy[i])) * inv2;
        }
      });
}

AdaGrad::AdaGrad(std::vector<Parameter*> params, double lr,
                 double weight_decay, double eps)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay), eps_(eps) {
  acc_.reserve(params_.size());
  for (auto* p : params_) acc_.emplace_back(p->value().shape(), 0.0);
}

void AdaGrad::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (!p.grad().all_finite())
      throw std::runtime_error("adagrad: non-finite gradient in " + p.name());
    auto theta = p.value().values();
    auto grad = p.grad().values();
    auto acc = acc_[k].values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = grad[i] + weight_decay_ * theta[i];
      acc[i] += gi * gi;
      theta[i] -= lr_ * gi / (std::sqrt(acc[i]) + eps_);
    }
  }
}

void AdaGrad::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

}  // namespace alcnet::objective
