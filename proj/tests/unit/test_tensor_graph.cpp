#include <gtest/gtest.h>

#include <cmath>

#include "alcnet/graph.hpp"
#include "alcnet/ops.hpp"
#include "helpers.hpp"

using namespace alcnet;
using namespace alcnet::nn;

TEST(Tensor, ShapeAndIndexing) {
  Tensor t(Shape{2, 3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_DOUBLE_EQ(t.sum(), 180.0);
  t.at(1, 2, 3, 4) = 7.0;
  EXPECT_EQ(t[119], 7.0);
  EXPECT_EQ(t.plane(1, 2)[19], 7.0);
  EXPECT_EQ(Shape({2, 3, 4, 5}).str().empty(), false);
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor(Shape{0, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}, std::vector<double>(3)), std::invalid_argument);
  EXPECT_THROW(require_same_shape(Shape{1, 1, 2, 2}, Shape{1, 1, 2, 3}, "x"),
               std::invalid_argument);
}

TEST(Tensor, FiniteCheck) {
  Tensor t(Shape{1, 1, 2, 2});
  EXPECT_TRUE(t.all_finite());
  t[3] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Graph, BackwardThroughChain) {
  // f = Σ (a·b + a) with scalar-like maps; df/da = b + 1, df/db = a.
  Parameter a("a", Tensor(Shape{1, 1, 1, 3}, std::vector<double>{1, 2, 3}));
  Parameter b("b", Tensor(Shape{1, 1, 1, 3}, std::vector<double>{4, 5, 6}));
  Graph g;
  const Var va = g.param(a), vb = g.param(b);
  const Var out = sum(g, add(g, mul(g, va, vb), va));
  EXPECT_DOUBLE_EQ(g.value(out)[0], 4 + 10 + 18 + 6);
  g.backward(out);
  EXPECT_EQ(a.grad()[0], 5.0);
  EXPECT_EQ(a.grad()[2], 7.0);
  EXPECT_EQ(b.grad()[1], 2.0);
}

TEST(Graph, ParamFanOutIsSummed) {
  Parameter a("a", Tensor(Shape{1, 1, 1, 1}, 3.0));
  Graph g;
  EXPECT_EQ(g.param(a), g.param(a));
  const Var out = sum(g, mul(g, g.param(a), g.param(a)));
  g.backward(out);
  EXPECT_DOUBLE_EQ(a.grad()[0], 6.0);
}

TEST(Graph, GradientsAccumulateAcrossGraphs) {
  Parameter a("a", Tensor(Shape{1, 1, 1, 1}, 2.0));
  for (int k = 0; k < 2; ++k) {
    Graph g;
    g.backward(sum(g, g.param(a)));
  }
  EXPECT_DOUBLE_EQ(a.grad()[0], 2.0);
  a.zero_grad();
  EXPECT_DOUBLE_EQ(a.grad()[0], 0.0);
}

TEST(Graph, BackwardRequiresScalar) {
  Graph g;
  const Var x = g.input(Tensor(Shape{1, 1, 2, 2}), true);
  EXPECT_THROW(g.backward(x), std::invalid_argument);
  EXPECT_THROW(g.value(Var{}), std::out_of_range);
}

TEST(Graph, InputGradient) {
  Graph g;
  const Var x = g.input(Tensor(Shape{1, 1, 1, 2}, std::vector<double>{1, -2}), true);
  g.backward(sum(g, mul(g, x, x)));
  EXPECT_DOUBLE_EQ(g.grad(x)[0], 2.0);
  EXPECT_DOUBLE_EQ(g.grad(x)[1], -4.0);
}

TEST(Graph, InferenceGraphTracksNothing) {
  Parameter a("a", Tensor(Shape{1, 1, 1, 1}, 1.0));
  Graph g(false);
  const Var v = g.param(a);
  EXPECT_FALSE(g.requires_grad(v));
  EXPECT_FALSE(g.requires_grad(g.input(Tensor(Shape{}), true)));
}
