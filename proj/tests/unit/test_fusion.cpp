#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "alcnet/fusion.hpp"
#include "alcnet/gradcheck.hpp"
#include "helpers.hpp"

using namespace alcnet;
using nn::Shape;
using nn::Tensor;
using namespace alcnet::fusion;
using alcnet::testing::random_param;
using alcnet::testing::random_tensor;
using alcnet::testing::weighted_sum;

namespace {

std::vector<double> values(Graph& g, Var v) {
  const auto s = g.value(v).values();
  return {s.begin(), s.end()};
}

}  // namespace

TEST(FusionKind, NamesRoundTrip) {
  for (FusionKind k : {FusionKind::None, FusionKind::Add, FusionKind::Max, FusionKind::BLAM,
                       FusionKind::BGAM, FusionKind::TLAM})
    EXPECT_EQ(parse_fusion_kind(to_string(k)), k);
  EXPECT_THROW(parse_fusion_kind("sum"), std::invalid_argument);
  EXPECT_TRUE(uses_attention(FusionKind::BLAM));
  EXPECT_FALSE(uses_attention(FusionKind::Max));
}

TEST(ChannelAttention, ParameterCountAndShapes) {
  std::mt19937_64 rng(1);
  // C·C/4 + 2·C/4 + C/4·C + 2·C
  ChannelAttention local("l", 8, false, rng), global("g", 8, true, rng);
  EXPECT_EQ(local.num_params(), 16u + 4u + 16u + 16u);
  EXPECT_EQ(global.num_params(), local.num_params());
  Graph g;
  const Var x = g.input(random_tensor(Shape{2, 8, 6, 5}, 2));
  const Var l = local.forward(g, x, Mode::Train);
  const Var gl = global.forward(g, x, Mode::Train);
  EXPECT_EQ(g.value(l).shape(), (Shape{2, 8, 6, 5}));
  EXPECT_EQ(g.value(gl).shape(), (Shape{2, 8, 1, 1}));
  for (double v : g.value(l).values()) EXPECT_TRUE(v > 0.0 && v < 1.0);
  EXPECT_THROW(ChannelAttention("bad", 6, false, rng), std::invalid_argument);
  EXPECT_THROW(local_attention(g, x, global, Mode::Train), std::invalid_argument);
}

TEST(Fuse, FormulasMatchDefinitions) {
  std::mt19937_64 rng(3);
  ChannelAttention local("l", 4, false, rng), global("g", 4, true, rng);
  Graph g;
  const Var x = g.input(random_tensor(Shape{2, 4, 3, 3}, 4));
  const Var y = g.input(random_tensor(Shape{2, 4, 3, 3}, 5));
  const auto X = values(g, x), Y = values(g, y);
  const auto L = values(g, local.forward(g, x, Mode::Train));
  const auto G = values(g, global.forward(g, x, Mode::Train));

  const auto add = values(g, fuse(g, x, y, FusionKind::Add, nullptr, Mode::Train));
  const auto mx = values(g, fuse(g, x, y, FusionKind::Max, nullptr, Mode::Train));
  const auto blam = values(g, fuse(g, x, y, FusionKind::BLAM, &local, Mode::Train));
  const auto tlam = values(g, fuse(g, x, y, FusionKind::TLAM, &local, Mode::Train));
  const auto bgam = values(g, fuse(g, x, y, FusionKind::BGAM, &global, Mode::Train));
  for (std::size_t i = 0; i < X.size(); ++i) {
    const std::size_t nc = i / 9;
    EXPECT_DOUBLE_EQ(add[i], X[i] + Y[i]);
    EXPECT_DOUBLE_EQ(mx[i], std::max(X[i], Y[i]));
    EXPECT_DOUBLE_EQ(blam[i], X[i] + L[i] * Y[i]);
    EXPECT_DOUBLE_EQ(tlam[i], L[i] * X[i] + Y[i]);
    EXPECT_DOUBLE_EQ(bgam[i], X[i] + G[nc] * Y[i]);
  }
}

TEST(Fuse, RejectsMissingOrWrongAttention) {
  std::mt19937_64 rng(6);
  ChannelAttention local("l", 4, false, rng);
  Graph g;
  const Var x = g.input(Tensor(Shape{1, 4, 2, 2}));
  EXPECT_THROW(fuse(g, x, x, FusionKind::BLAM, nullptr, Mode::Train), std::invalid_argument);
  EXPECT_THROW(fuse(g, x, x, FusionKind::BGAM, &local, Mode::Train), std::invalid_argument);
  EXPECT_THROW(fuse(g, x, x, FusionKind::None, nullptr, Mode::Train), std::invalid_argument);
  EXPECT_THROW(fuse(g, x, g.input(Tensor(Shape{1, 4, 2, 3})), FusionKind::Add, nullptr, Mode::Train),
               std::invalid_argument);
}

TEST(SameLayer, ContrastTransformsHaveNoParameters) {
  std::mt19937_64 rng(7);
  for (SameLayer s : {SameLayer::dlc(2), SameLayer::mlc({2, 3})}) {
    M2lcFusion f("m2lc", {8, 16, 32}, s, FusionKind::Add, rng);
    std::vector<CensusRow> rows;
    f.census(rows);
    std::size_t contrast_rows = 0;
    for (const auto& r : rows)
      if (r.module.ends_with(".dlc") || r.module.ends_with(".mlc")) {
        ++contrast_rows;
        EXPECT_EQ(r.params, 0u) << r.module;
      }
    EXPECT_EQ(contrast_rows, 3u);
  }
}

class M2lcKinds : public ::testing::TestWithParam<FusionKind> {};

TEST_P(M2lcKinds, FoldsToShallowestResolution) {
  std::mt19937_64 rng(8);
  M2lcFusion f("m2lc", {4, 8, 16}, SameLayer::mlc({1, 2}), GetParam(), rng);
  EXPECT_EQ(f.num_sites(), 2u);
  Graph g;
  const Var st[] = {g.input(random_tensor(Shape{1, 4, 24, 24}, 9)),
                    g.input(random_tensor(Shape{1, 8, 12, 12}, 10)),
                    g.input(random_tensor(Shape{1, 16, 6, 6}, 11))};
  const Var out = f.forward(g, st, Mode::Train);
  EXPECT_EQ(g.value(out).shape(), (Shape{1, 4, 24, 24}));
  EXPECT_THROW(f.forward(g, std::span<const Var>(st, 2), Mode::Train), std::invalid_argument);
}

TEST_P(M2lcKinds, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  M2lcFusion f("m2lc", {4, 8}, SameLayer::dlc(1), GetParam(), rng);
  auto a = random_param("a", Shape{2, 4, 6, 6}, 13);
  auto b = random_param("b", Shape{2, 8, 3, 3}, 14);
  nn::StateRefs refs;
  f.collect(refs);
  std::vector<nn::Parameter*> ps{a.get(), b.get()};
  ps.insert(ps.end(), refs.params.begin(), refs.params.end());
  const double err = nn::grad_check(
      [&](Graph& g) {
        const Var st[] = {g.param(*a), g.param(*b)};
        return weighted_sum(g, f.forward(g, st, Mode::Train));
      },
      ps);
  EXPECT_LT(err, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(AllFused, M2lcKinds,
                         ::testing::Values(FusionKind::Add, FusionKind::Max, FusionKind::BLAM,
                                           FusionKind::BGAM, FusionKind::TLAM));

TEST(M2lc, NoneTakesOneStage) {
  std::mt19937_64 rng(15);
  EXPECT_THROW(M2lcFusion("m", {4, 8}, SameLayer::plain(), FusionKind::None, rng),
               std::invalid_argument);
  EXPECT_THROW(M2lcFusion("m", {4}, SameLayer::plain(), FusionKind::Add, rng),
               std::invalid_argument);
}
