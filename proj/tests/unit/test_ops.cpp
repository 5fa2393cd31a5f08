#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "alcnet/gradcheck.hpp"
#include "alcnet/ops.hpp"
#include "helpers.hpp"

using namespace alcnet;
using namespace alcnet::nn;
using alcnet::testing::random_param;
using alcnet::testing::random_tensor;
using alcnet::testing::weighted_sum;

namespace {

constexpr double kTol = 1e-6;

// Direct six-loop cross-correlation with zero padding.
Tensor naive_conv(const Tensor& x, const Tensor& k, int stride, int pad) {
  const int kk = k.height();
  const int oh = (x.height() + 2 * pad - kk) / stride + 1;
  const int ow = (x.width() + 2 * pad - kk) / stride + 1;
  Tensor out(Shape{x.batch(), k.batch(), oh, ow});
  for (int n = 0; n < x.batch(); ++n)
    for (int co = 0; co < k.batch(); ++co)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double s = 0;
          for (int ci = 0; ci < x.channels(); ++ci)
            for (int a = 0; a < kk; ++a)
              for (int b = 0; b < kk; ++b) {
                const int r = i * stride + a - pad, c = j * stride + b - pad;
                if (r < 0 || c < 0 || r >= x.height() || c >= x.width()) continue;
                s += x.at(n, ci, r, c) * k.at(co, ci, a, b);
              }
          out.at(n, co, i, j) = s;
        }
  return out;
}

}  // namespace

class ConvOracle : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(ConvOracle, MatchesDirectLoop) {
  const auto [k, stride, size] = GetParam();
  const Tensor x = random_tensor(Shape{2, 3, size, size + 1}, 1);
  const Tensor w = random_tensor(Shape{4, 3, k, k}, 2);
  const Tensor got = conv2d_forward(x, w, stride, k / 2);
  const Tensor want = naive_conv(x, w, stride, k / 2);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(std::tuple{1, 1, 5}, std::tuple{3, 1, 6},
                                           std::tuple{3, 2, 7}, std::tuple{1, 2, 8},
                                           std::tuple{5, 1, 5}));

TEST(Conv, OutputSizeIsCeil) {
  EXPECT_EQ(conv_output_size(7, 3, 2, 1), 4);
  EXPECT_EQ(conv_output_size(8, 3, 2, 1), 4);
  EXPECT_EQ(conv_output_size(8, 1, 1, 0), 8);
}

TEST(Conv, RejectsBadArguments) {
  Graph g;
  const Var x = g.input(Tensor(Shape{1, 2, 4, 4}));
  EXPECT_THROW(conv2d(g, x, g.input(Tensor(Shape{1, 3, 3, 3})), 1), std::invalid_argument);
  EXPECT_THROW(conv2d(g, x, g.input(Tensor(Shape{1, 2, 2, 2})), 1), std::invalid_argument);
  EXPECT_THROW(conv2d(g, x, g.input(Tensor(Shape{1, 2, 3, 3})), 3), std::invalid_argument);
  EXPECT_THROW(conv2d(g, x, g.input(Tensor(Shape{1, 2, 3, 3})), 1, 0), std::invalid_argument);
}

TEST(GradCheck, Conv) {
  for (int stride : {1, 2}) {
    auto x = random_param("x", Shape{2, 2, 5, 6}, 3);
    auto w = random_param("w", Shape{3, 2, 3, 3}, 4);
    Parameter* ps[] = {x.get(), w.get()};
    const double err = grad_check(
        [&](Graph& g) { return weighted_sum(g, conv2d(g, g.param(*x), g.param(*w), stride)); }, ps);
    EXPECT_LT(err, kTol) << "stride " << stride;
  }
}

TEST(GradCheck, BiasAdd) {
  auto x = random_param("x", Shape{2, 3, 4, 4}, 5);
  auto b = random_param("b", Shape{1, 3, 1, 1}, 6);
  Parameter* ps[] = {x.get(), b.get()};
  EXPECT_LT(grad_check([&](Graph& g) { return weighted_sum(g, bias_add(g, g.param(*x), g.param(*b))); }, ps),
            kTol);
}

TEST(GradCheck, BatchNormTrain) {
  auto x = random_param("x", Shape{3, 2, 4, 4}, 7);
  auto gm = random_param("gamma", Shape{1, 2, 1, 1}, 8, 0.5, 1.5);
  auto bt = random_param("beta", Shape{1, 2, 1, 1}, 9);
  Parameter* ps[] = {x.get(), gm.get(), bt.get()};
  BatchNormState st;
  EXPECT_LT(grad_check(
                [&](Graph& g) {
                  return weighted_sum(g, batch_norm(g, g.param(*x), g.param(*gm), g.param(*bt),
                                                    st, Mode::Train));
                },
                ps),
            kTol);
}

TEST(GradCheck, BatchNormEval) {
  auto x = random_param("x", Shape{2, 2, 3, 3}, 10);
  auto gm = random_param("gamma", Shape{1, 2, 1, 1}, 11);
  auto bt = random_param("beta", Shape{1, 2, 1, 1}, 12);
  Parameter* ps[] = {x.get(), gm.get(), bt.get()};
  BatchNormState st{{0.3, -0.2}, {1.5, 0.7}, true};
  EXPECT_LT(grad_check(
                [&](Graph& g) {
                  return weighted_sum(g, batch_norm(g, g.param(*x), g.param(*gm), g.param(*bt),
                                                    st, Mode::Eval));
                },
                ps),
            kTol);
}

TEST(GradCheck, Activations) {
  // Keep relu inputs away from the kink.
  auto x = random_param("x", Shape{1, 2, 4, 4}, 13, 0.1, 1.0);
  for (auto& v : x->value().values()) v = (&v - x->value().data()) % 2 ? -v : v;
  Parameter* ps[] = {x.get()};
  for (Activation a : {Activation::Relu, Activation::Sigmoid})
    EXPECT_LT(grad_check([&](Graph& g) { return weighted_sum(g, activation(g, g.param(*x), a)); }, ps),
              kTol);
}

TEST(GradCheck, Elementwise) {
  auto a = random_param("a", Shape{2, 1, 3, 3}, 14);
  auto b = random_param("b", Shape{2, 1, 3, 3}, 15);
  Parameter* ps[] = {a.get(), b.get()};
  for (Elementwise k : {Elementwise::Add, Elementwise::Sub, Elementwise::Mul, Elementwise::Max})
    EXPECT_LT(grad_check([&](Graph& g) {
                return weighted_sum(g, elementwise(g, g.param(*a), g.param(*b), k));
              }, ps),
              kTol);
}

TEST(GradCheck, ReduceStack) {
  auto a = random_param("a", Shape{1, 2, 3, 3}, 16);
  auto b = random_param("b", Shape{1, 2, 3, 3}, 17);
  auto c = random_param("c", Shape{1, 2, 3, 3}, 18);
  Parameter* ps[] = {a.get(), b.get(), c.get()};
  for (Reduction r : {Reduction::Min, Reduction::Max})
    EXPECT_LT(grad_check([&](Graph& g) {
                const Var st[] = {g.param(*a), g.param(*b), g.param(*c)};
                return weighted_sum(g, reduce_over_stack(g, st, r));
              }, ps),
              kTol);
}

TEST(GradCheck, UpsamplePoolExpand) {
  auto x = random_param("x", Shape{2, 3, 3, 4}, 19);
  Parameter* ps[] = {x.get()};
  EXPECT_LT(grad_check([&](Graph& g) { return weighted_sum(g, upsample_nearest(g, g.param(*x), 2)); }, ps),
            kTol);
  EXPECT_LT(grad_check([&](Graph& g) {
              return weighted_sum(g, expand_spatial(g, global_avg_pool(g, g.param(*x)), 5, 2));
            }, ps),
            kTol);
}

TEST(BatchNorm, TrainOutputIsNormalized) {
  Graph g;
  const Tensor xs = random_tensor(Shape{4, 2, 5, 5}, 20, -3, 7);
  BatchNormState st;
  const Var y = batch_norm(g, g.input(xs), g.input(Tensor(Shape{1, 2, 1, 1}, 1.0)),
                           g.input(Tensor(Shape{1, 2, 1, 1}, 0.0)), st, Mode::Train);
  const Tensor& v = g.value(y);
  for (int c = 0; c < 2; ++c) {
    double s = 0, s2 = 0;
    for (int n = 0; n < 4; ++n)
      for (int i = 0; i < 25; ++i) {
        s += v.plane(n, c)[i];
        s2 += v.plane(n, c)[i] * v.plane(n, c)[i];
      }
    EXPECT_NEAR(s / 100, 0.0, 1e-12);
    EXPECT_NEAR(s2 / 100, 1.0, 1e-4);
  }
}

TEST(BatchNorm, RunningStatistics) {
  BatchNormState st;
  const Tensor one(Shape{1, 1, 1, 1}, 1.0), zero(Shape{1, 1, 1, 1}, 0.0);
  auto run = [&](std::vector<double> vals, Mode mode) {
    Graph g;
    const int n = static_cast<int>(vals.size());
    return g.value(batch_norm(g, g.input(Tensor(Shape{1, 1, 1, n}, std::move(vals))),
                              g.input(one), g.input(zero), st, mode));
  };
  EXPECT_THROW(run({1, 2}, Mode::Eval), std::logic_error);
  run({1, 3}, Mode::Train);  // mean 2, unbiased var 2
  EXPECT_DOUBLE_EQ(st.running_mean[0], 2.0);
  EXPECT_DOUBLE_EQ(st.running_var[0], 2.0);
  run({5, 5}, Mode::Train);  // mean 5, var 0
  EXPECT_DOUBLE_EQ(st.running_mean[0], 0.9 * 2.0 + 0.1 * 5.0);
  EXPECT_DOUBLE_EQ(st.running_var[0], 0.9 * 2.0);
  const Tensor out = run({3.3}, Mode::Eval);
  EXPECT_NEAR(out[0], (3.3 - 2.3) / std::sqrt(1.8 + kBatchNormEps), 1e-12);
}

TEST(ReduceStack, TiesRouteToFirst) {
  Graph g;
  const Var a = g.input(Tensor(Shape{1, 1, 1, 1}, 1.0), true);
  const Var b = g.input(Tensor(Shape{1, 1, 1, 1}, 1.0), true);
  const Var st[] = {a, b};
  g.backward(sum(g, reduce_over_stack(g, st, Reduction::Min)));
  EXPECT_EQ(g.grad(a)[0], 1.0);
  EXPECT_EQ(g.grad(b)[0], 0.0);
}

TEST(Elementwise, MaxTiesRouteToFirst) {
  Graph g;
  const Var a = g.input(Tensor(Shape{1, 1, 1, 1}, 2.0), true);
  const Var b = g.input(Tensor(Shape{1, 1, 1, 1}, 2.0), true);
  g.backward(sum(g, maximum(g, a, b)));
  EXPECT_EQ(g.grad(a)[0], 1.0);
  EXPECT_EQ(g.grad(b)[0], 0.0);
}

TEST(Sigmoid, StableAtExtremes) {
  Graph g;
  const Var y = sigmoid(g, g.input(Tensor(Shape{1, 1, 1, 2}, std::vector<double>{-800, 800})));
  EXPECT_EQ(g.value(y)[0], 0.0);
  EXPECT_EQ(g.value(y)[1], 1.0);
}

TEST(Upsample, Replicates) {
  const Tensor x(Shape{1, 1, 1, 2}, std::vector<double>{1, 2});
  const Tensor y = upsample_nearest_forward(x, 2);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 2, 4}));
  EXPECT_EQ(y.at(0, 0, 1, 1), 1.0);
  EXPECT_EQ(y.at(0, 0, 1, 2), 2.0);
  Graph g;
  EXPECT_THROW(upsample_nearest(g, g.input(x), 1), std::invalid_argument);
}
