#include "alcnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace alcnet::nn {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  int cin, h, w, k, stride, pad, ho, wo;
  int rows() const { return cin * k * k; }
  int cols() const { return ho * wo; }
  bool is_pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

// Unfolds one sample (Cin×H×W) into a (Cin·k·k)×(Ho·Wo) matrix.
void im2col(const double* src, const ConvGeometry& g, double* col) {
  for (int c = 0; c < g.cin; ++c)
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        double* row = col + ((static_cast<std::size_t>(c) * g.k + ki) * g.k +
                             kj) *
                                g.cols();
        const double* plane = src + static_cast<std::size_t>(c) * g.h * g.w;
        for (int oi = 0; oi < g.ho; ++oi) {
          const int i = oi * g.stride - g.pad + ki;
          double* dst = row + static_cast<std::size_t>(oi) * g.wo;
          if (i < 0 || i >= g.h) {
            std::fill(dst, dst + g.wo, 0.0);
            continue;
          }
          for (int oj = 0; oj < g.wo; ++oj) {
            const int j = oj * g.stride - g.pad + kj;
            dst[oj] = (j < 0 || j >= g.w) ? 0.0 : plane[i * g.w + j];
          }
        }
      }
}

void col2im(const double* col, const ConvGeometry& g, double* dst) {
  for (int c = 0; c < g.cin; ++c)
    for (int ki = 0; ki < g.k; ++ki)
      for (int kj = 0; kj < g.k; ++kj) {
        const double* row =
            col +
            ((static_cast<std::size_t>(c) * g.k + ki) * g.k + kj) * g.cols();
        double* plane = dst + static_cast<std::size_t>(c) * g.h * g.w;
        for (int oi = 0; oi < g.ho; ++oi) {
          const int i = oi * g.stride - g.pad + ki;
          if (i < 0 || i >= g.h) continue;
          const double* srow = row + static_cast<std::size_t>(oi) * g.wo;
          for (int oj = 0; oj < g.wo; ++oj) {
            const int j = oj * g.stride - g.pad + kj;
            if (j >= 0 && j < g.w) plane[i * g.w + j] += srow[oj];
          }
        }
      }
}

ConvGeometry conv_geometry(const Shape& in, const Shape& kernel, int stride,
                           int padding) {
  if (kernel.c != in.c)
    throw std::invalid_argument(
        "conv2d: input channels " + std::to_string(in.c) +
        " do not match kernel input channels " + std::to_string(kernel.c));
  if (kernel.h != kernel.w || kernel.h % 2 == 0)
    throw std::invalid_argument("conv2d: kernel must be square and odd, got " +
                                kernel.str());
  if (stride != 1 && stride != 2)
    throw std::invalid_argument("conv2d: stride must be 1 or 2");
  if (padding != kernel.h / 2)
    throw std::invalid_argument("conv2d: padding must be k/2");
  ConvGeometry g{in.c,
                 in.h,
                 in.w,
                 kernel.h,
                 stride,
                 padding,
                 conv_output_size(in.h, kernel.h, stride, padding),
                 conv_output_size(in.w, kernel.h, stride, padding)};
  return g;
}

}  // namespace

int conv_output_size(int in, int k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, int stride,
                      int padding) {
  const auto g = conv_geometry(input.shape(), kernel.shape(), stride, padding);
  const int cout = kernel.shape().n;
  Tensor out(Shape{input.batch(), cout, g.ho, g.wo});
  ConstMatMap wmat(kernel.data(), cout, g.rows());
  std::vector<double> col;
  if (!g.is_pointwise()) col.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  for (int n = 0; n < input.batch(); ++n) {
    const double* src = input.plane(n, 0);
    if (!g.is_pointwise()) {
      im2col(src, g, col.data());
      src = col.data();
    }
    ConstMatMap cmat(src, g.rows(), g.cols());
    MatMap omat(out.plane(n, 0), cout, g.cols());
    omat.noalias() = wmat * cmat;
  }
  return out;
}

Var conv2d(Graph& g, Var input, Var kernel, int stride, int padding) {
  const Tensor& x = g.value(input);
  const Tensor& w = g.value(kernel);
  Tensor out = conv2d_forward(x, w, stride, padding);
  const auto geo = conv_geometry(x.shape(), w.shape(), stride, padding);
  return g.record(
      OpKind::Conv2d, {input, kernel}, std::move(out),
      [geo](const BackwardContext& ctx) {
        const Tensor& x = ctx.input(0);
        const Tensor& w = ctx.input(1);
        const Tensor& gy = ctx.out_grad();
        const int cout = w.shape().n;
        Tensor* gx = ctx.input_grad(0);
        Tensor* gw = ctx.input_grad(1);
        ConstMatMap wmat(w.data(), cout, geo.rows());
        std::vector<double> col(static_cast<std::size_t>(geo.rows()) *
                                geo.cols());
        for (int n = 0; n < x.batch(); ++n) {
          ConstMatMap gymat(gy.plane(n, 0), cout, geo.cols());
          if (gw) {
            const double* src = x.plane(n, 0);
            if (!geo.is_pointwise()) {
              im2col(src, geo, col.data());
              src = col.data();
            }
            ConstMatMap cmat(src, geo.rows(), geo.cols());
            MatMap gwmat(gw->data(), cout, geo.rows());
            gwmat.noalias() += gymat * cmat.transpose();
          }
          if (gx) {
            if (geo.is_pointwise()) {
              MatMap gxmat(gx->plane(n, 0), geo.rows(), geo.cols());
              gxmat.noalias() += wmat.transpose() * gymat;
            } else {
              MatMap cmat(col.data(), geo.rows(), geo.cols());
              cmat.noalias() = wmat.transpose() * gymat;
              col2im(col.data(), geo, gx->plane(n, 0));
            }
          }
        }
      });
}

Var conv2d(Graph& g, Var input, Var kernel, int stride) {
  return conv2d(g, input, kernel, stride, g.value(kernel).height() / 2);
}

Var bias_add(Graph& g, Var input, Var bias) {
  const Tensor& x = g.value(input);
  const Tensor& b = g.value(bias);
  if (b.shape() != Shape{1, x.channels(), 1, 1})
    throw std::invalid_argument("bias_add: bias must be 1x" +
                                std::to_string(x.channels()) + "x1x1");
  Tensor out = x;
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c) {
      double* p = out.plane(n, c);
      for (std::size_t i = 0; i < x.shape().plane(); ++i) p[i] += b[c];
    }
  return g.record(OpKind::BiasAdd, {input, bias}, std::move(out),
                  [](const BackwardContext& ctx) {
                    const Tensor& gy = ctx.out_grad();
                    if (Tensor* gx = ctx.input_grad(0)) *gx += gy;
                    if (Tensor* gb = ctx.input_grad(1)) {
                      for (int n = 0; n < gy.batch(); ++n)
                        for (int c = 0; c < gy.channels(); ++c) {
                          const double* p = gy.plane(n, c);
                          double s = 0.0;
                          for (std::size_t i = 0; i < gy.shape().plane(); ++i)
                            s += p[i];
                          (*gb)[c] += s;
                        }
                    }
                  });
}

Var batch_norm(Graph& g, Var input, Var gamma, Var beta, BatchNormState& state,
               Mode mode) {
  const Tensor& x = g.value(input);
  const int channels = x.channels();
  const Shape pshape{1, channels, 1, 1};
  if (g.value(gamma).shape() != pshape || g.value(beta).shape() != pshape)
    throw std::invalid_argument("batch_norm: gamma/beta must have length C = " +
                                std::to_string(channels));
  const Tensor& gm = g.value(gamma);
  const Tensor& bt = g.value(beta);
  const std::size_t plane = x.shape().plane();
  const std::size_t count = plane * static_cast<std::size_t>(x.batch());

  std::vector<double> mean(channels), inv_std(channels);
  if (mode == Mode::Train) {
    const bool first = !state.initialized ||
                       state.running_mean.size() !=
                           static_cast<std::size_t>(channels);
    if (first) {
      state.running_mean.assign(channels, 0.0);
      state.running_var.assign(channels, 1.0);
    }
    for (int c = 0; c < channels; ++c) {
      double s = 0.0;
      for (int n = 0; n < x.batch(); ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double v = 0.0;
      for (int n = 0; n < x.batch(); ++n) {
        const double* p = x.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) v += (p[i] - mu) * (p[i] - mu);
      }
      const double var = v / static_cast<double>(count);
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
      const double unbiased =
          count > 1 ? v / static_cast<double>(count - 1) : var;
      if (first) {
        state.running_mean[c] = mu;
        state.running_var[c] = unbiased;
      } else {
        state.running_mean[c] = kBatchNormMomentum * state.running_mean[c] +
                                (1.0 - kBatchNormMomentum) * mu;
        state.running_var[c] = kBatchNormMomentum * state.running_var[c] +
                               (1.0 - kBatchNormMomentum) * unbiased;
      }
    }
    state.initialized = true;
  } else {
    if (!state.initialized ||
        state.running_mean.size() != static_cast<std::size_t>(channels))
      throw std::logic_error("batch_norm: uninitialized running stats");
    for (int c = 0; c < channels; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + kBatchNormEps);
    }
  }

  Tensor xhat(x.shape());
  Tensor out(x.shape());
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < channels; ++c) {
      const double* p = x.plane(n, c);
      double* h = xhat.plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        h[i] = (p[i] - mean[c]) * inv_std[c];
        o[i] = gm[c] * h[i] + bt[c];
      }
    }

  const bool train = mode == Mode::Train;
  return g.record(
      OpKind::BatchNorm, {input, gamma, beta}, std::move(out),
      [xhat = std::move(xhat), inv_std = std::move(inv_std), train,
       count](const BackwardContext& ctx) {
        const Tensor& gy = ctx.out_grad();
        const Tensor& gm = ctx.input(1);
        const std::size_t plane = gy.shape().plane();
        Tensor* gx = ctx.input_grad(0);
        Tensor* ggamma = ctx.input_grad(1);
        Tensor* gbeta = ctx.input_grad(2);
        for (int c = 0; c < gy.channels(); ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (int n = 0; n < gy.batch(); ++n) {
            const double* d = gy.plane(n, c);
            const double* h = xhat.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
              sum_dy += d[i];
              sum_dy_xhat += d[i] * h[i];
            }
          }
          if (ggamma) (*ggamma)[c] += sum_dy_xhat;
          if (gbeta) (*gbeta)[c] += sum_dy;
          if (!gx) continue;
          const double scale = gm[c] * inv_std[c];
          const double m = static_cast<double>(count);
          for (int n = 0; n < gy.batch(); ++n) {
            const double* d = gy.plane(n, c);
            const double* h = xhat.plane(n, c);
            double* o = gx->plane(n, c);
            if (train) {
              for (std::size_t i = 0; i < plane; ++i)
                o[i] += scale * (d[i] - sum_dy / m - h[i] * sum_dy_xhat / m);
            } else {
              for (std::size_t i = 0; i < plane; ++i) o[i] += scale * d[i];
            }
          }
        }
      });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var activation(Graph& g, Var input, Activation kind) {
  const Tensor& x = g.value(input);
  Tensor out(x.shape());
  if (kind == Activation::Relu) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0 ? x[i] : 0.0;
    return g.record(OpKind::Relu, {input}, std::move(out),
                    [](const BackwardContext& ctx) {
                      Tensor* gx = ctx.input_grad(0);
                      const Tensor& x = ctx.input(0);
                      const Tensor& gy = ctx.out_grad();
                      for (std::size_t i = 0; i < x.size(); ++i)
                        if (x[i] > 0) (*gx)[i] += gy[i];
                    });
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_sigmoid(x[i]);
  return g.record(OpKind::Sigmoid, {input}, std::move(out),
                  [](const BackwardContext& ctx) {
                    Tensor* gx = ctx.input_grad(0);
                    const Tensor& y = ctx.output();
                    const Tensor& gy = ctx.out_grad();
                    for (std::size_t i = 0; i < y.size(); ++i)
                      (*gx)[i] += gy[i] * y[i] * (1.0 - y[i]);
                  });
}

Var elementwise(Graph& g, Var a, Var b, Elementwise kind) {
  const Tensor& x = g.value(a);
  const Tensor& y = g.value(b);
  require_same_shape(x.shape(), y.shape(), "elementwise");
  Tensor out(x.shape());
  const std::size_t n = x.size();
  switch (kind) {
    case Elementwise::Add:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
      return g.record(OpKind::Add, {a, b}, std::move(out),
                      [](const BackwardContext& ctx) {
                        if (Tensor* ga = ctx.input_grad(0))
                          *ga += ctx.out_grad();
                        if (Tensor* gb = ctx.input_grad(1))
                          *gb += ctx.out_grad();
                      });
    case Elementwise::Sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
      return g.record(OpKind::Sub, {a, b}, std::move(out),
                      [](const BackwardContext& ctx) {
                        const Tensor& gy = ctx.out_grad();
                        if (Tensor* ga = ctx.input_grad(0)) *ga += gy;
                        if (Tensor* gb = ctx.input_grad(1))
                          for (std::size_t i = 0; i < gy.size(); ++i)
                            (*gb)[i] -= gy[i];
                      });
    case Elementwise::Mul:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
      return g.record(OpKind::Mul, {a, b}, std::move(out),
                      [](const BackwardContext& ctx) {
                        const Tensor& gy = ctx.out_grad();
                        const Tensor& x = ctx.input(0);
                        const Tensor& y = ctx.input(1);
                        if (Tensor* ga = ctx.input_grad(0))
                          for (std::size_t i = 0; i < gy.size(); ++i)
                            (*ga)[i] += gy[i] * y[i];
                        if (Tensor* gb = ctx.input_grad(1))
                          for (std::size_t i = 0; i < gy.size(); ++i)
                            (*gb)[i] += gy[i] * x[i];
                      });
    case Elementwise::Max:
      for (std::size_t i = 0; i < n; ++i) out[i] = x[i] >= y[i] ? x[i] : y[i];
      return g.record(OpKind::Max, {a, b}, std::move(out),
                      [](const BackwardContext& ctx) {
                        const Tensor& gy = ctx.out_grad();
                        const Tensor& x = ctx.input(0);
                        const Tensor& y = ctx.input(1);
                        Tensor* ga = ctx.input_grad(0);
                        Tensor* gb = ctx.input_grad(1);
                        for (std::size_t i = 0; i < gy.size(); ++i) {
                          if (x[i] >= y[i]) {
                            if (ga) (*ga)[i] += gy[i];
                          } else if (gb) {
                            (*gb)[i] += gy[i];
                          }
                        }
                      });
  }
  throw std::logic_error("elementwise: unknown kind");
}

Tensor reduce_stack_forward(std::span<const Tensor* const> stack,
                            Reduction kind,
                            std::vector<std::uint8_t>* argext) {
  if (stack.empty())
    throw std::invalid_argument("reduce_over_stack: empty stack");
  if (stack.size() > 255)
    throw std::invalid_argument("reduce_over_stack: at most 255 maps");
  for (const Tensor* t : stack)
    require_same_shape(stack[0]->shape(), t->shape(), "reduce_over_stack");
  Tensor out = *stack[0];
  if (argext) argext->assign(out.size(), 0);
  for (std::size_t k = 1; k < stack.size(); ++k) {
    const Tensor& t = *stack[k];
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool better =
          kind == Reduction::Max ? t[i] > out[i] : t[i] < out[i];
      if (better) {
        out[i] = t[i];
        if (argext) (*argext)[i] = static_cast<std::uint8_t>(k);
      }
    }
  }
  return out;
}

Var reduce_over_stack(Graph& g, std::span<const Var> stack, Reduction kind) {
  std::vector<const Tensor*> values;
  values.reserve(stack.size());
  for (Var v : stack) values.push_back(&g.value(v));
  std::vector<std::uint8_t> arg;
  Tensor out = reduce_stack_forward(values, kind, &arg);
  return g.record(OpKind::ReduceStack, {stack.begin(), stack.end()},
                  std::move(out),
                  [arg = std::move(arg)](const BackwardContext& ctx) {
                    const Tensor& gy = ctx.out_grad();
                    std::vector<Tensor*> grads(ctx.num_inputs());
                    for (std::size_t k = 0; k < grads.size(); ++k)
                      grads[k] = ctx.input_grad(k);
                    for (std::size_t i = 0; i < gy.size(); ++i)
                      if (Tensor* t = grads[arg[i]]) (*t)[i] += gy[i];
                  });
}

Tensor upsample_nearest_forward(const Tensor& x, int factor) {
  if (factor < 2)
    throw std::invalid_argument("upsample_nearest: factor must be >= 2");
  Tensor out(Shape{x.batch(), x.channels(), x.height() * factor,
                   x.width() * factor});
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c) {
      const double* src = x.plane(n, c);
      double* dst = out.plane(n, c);
      const int wo = out.width();
      for (int i = 0; i < out.height(); ++i)
        for (int j = 0; j < wo; ++j)
          dst[i * wo + j] = src[(i / factor) * x.width() + j / factor];
    }
  return out;
}

Var upsample_nearest(Graph& g, Var input, int factor) {
  Tensor out = upsample_nearest_forward(g.value(input), factor);
  return g.record(OpKind::Upsample, {input}, std::move(out),
                  [factor](const BackwardContext& ctx) {
                    Tensor* gx = ctx.input_grad(0);
                    const Tensor& gy = ctx.out_grad();
                    const int w = gx->width();
                    for (int n = 0; n < gy.batch(); ++n)
                      for (int c = 0; c < gy.channels(); ++c) {
                        const double* src = gy.plane(n, c);
                        double* dst = gx->plane(n, c);
                        for (int i = 0; i < gy.height(); ++i)
                          for (int j = 0; j < gy.width(); ++j)
                            dst[(i / factor) * w + j / factor] +=
                                src[i * gy.width() + j];
                      }
                  });
}

Var global_avg_pool(Graph& g, Var input) {
  const Tensor& x = g.value(input);
  Tensor out(Shape{x.batch(), x.channels(), 1, 1});
  const std::size_t plane = x.shape().plane();
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c) {
      const double* p = x.plane(n, c);
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
      out.at(n, c, 0, 0) = s / static_cast<double>(plane);
    }
  return g.record(OpKind::GlobalAvgPool, {input}, std::move(out),
                  [](const BackwardContext& ctx) {
                    Tensor* gx = ctx.input_grad(0);
                    const Tensor& gy = ctx.out_grad();
                    const std::size_t plane = gx->shape().plane();
                    const double inv = 1.0 / static_cast<double>(plane);
                    for (int n = 0; n < gx->batch(); ++n)
                      for (int c = 0; c < gx->channels(); ++c) {
                        double* p = gx->plane(n, c);
                        const double v = gy.at(n, c, 0, 0) * inv;
                        for (std::size_t i = 0; i < plane; ++i) p[i] += v;
                      }
                  });
}

Var expand_spatial(Graph& g, Var input, int height, int width) {
  const Tensor& x = g.value(input);
  if (x.height() != 1 || x.width() != 1)
    throw std::invalid_argument("expand_spatial: input must be Nx C x1x1");
  Tensor out(Shape{x.batch(), x.channels(), height, width});
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c) {
      double* p = out.plane(n, c);
      std::fill(p, p + out.shape().plane(), x.at(n, c, 0, 0));
    }
  return g.record(OpKind::ExpandSpatial, {input}, std::move(out),
                  [](const BackwardContext& ctx) {
                    Tensor* gx = ctx.input_grad(0);
                    const Tensor& gy = ctx.out_grad();
                    for (int n = 0; n < gy.batch(); ++n)
                      for (int c = 0; c < gy.channels(); ++c) {
                        const double* p = gy.plane(n, c);
                        double s = 0.0;
                        for (std::size_t i = 0; i < gy.shape().plane(); ++i)
                          s += p[i];
                        gx->at(n, c, 0, 0) += s;
                      }
                  });
}

Var sum(Graph& g, Var input) {
  Tensor out(Shape{1, 1, 1, 1}, g.value(input).sum());
  return g.record(OpKind::Sum, {input}, std::move(out),
                  [](const BackwardContext& ctx) {
                    Tensor* gx = ctx.input_grad(0);
                    const double v = ctx.out_grad()[0];
                    for (double& e : gx->values()) e += v;
                  });
}

}  // namespace alcnet::nn
