#include <gtest/gtest.h>

#include <sstream>

#include "alcnet/gradcheck.hpp"
#include "alcnet/net.hpp"
#include "helpers.hpp"

using namespace alcnet;
using nn::Shape;
using nn::Tensor;
using namespace alcnet::net;
using alcnet::testing::random_tensor;
using alcnet::testing::weighted_sum;

namespace {

Network desk_net(const std::string& name, int blocks = 1, std::uint64_t seed = 1) {
  return Network(named_arch(name, blocks, Profile::Desk),
                 BackboneConfig::for_profile(Profile::Desk, blocks), seed);
}

Tensor forward(Network& n, const Tensor& x, Mode mode) {
  Graph g(mode == Mode::Train);
  return g.value(n.forward(g, g.input(x), mode));
}

}  // namespace

class EveryArch : public ::testing::TestWithParam<std::string> {};

TEST_P(EveryArch, ForwardKeepsInputResolution) {
  Network n = desk_net(GetParam());
  const Tensor y = forward(n, random_tensor(Shape{2, 1, 32, 32}, 1, 0, 1), Mode::Train);
  EXPECT_EQ(y.shape(), (Shape{2, 1, 32, 32}));
  EXPECT_TRUE(y.all_finite());
  EXPECT_EQ(n.downsampling_sites(), 2);
}

TEST_P(EveryArch, CanonicalStringRoundTrips) {
  const ArchSpec a = named_arch(GetParam(), 2, Profile::Paper);
  EXPECT_EQ(ArchSpec::parse(a.canonical()), a);
}

TEST_P(EveryArch, CheckpointRoundTripIsLossless) {
  Network n = desk_net(GetParam(), 1, 3);
  forward(n, random_tensor(Shape{2, 1, 32, 32}, 2, 0, 1), Mode::Train);
  std::stringstream ss;
  save_checkpoint(ss, n);
  auto m = load_checkpoint(ss);
  EXPECT_EQ(m->arch(), n.arch());
  EXPECT_EQ(m->backbone_config(), n.backbone_config());
  auto a = n.state(), b = m->state();
  ASSERT_EQ(a.params.size(), b.params.size());
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    EXPECT_EQ(a.params[i]->name(), b.params[i]->name());
    const auto va = a.params[i]->value().values(), vb = b.params[i]->value().values();
    EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin(), vb.end()));
  }
  const Tensor x = random_tensor(Shape{1, 1, 32, 32}, 4, 0, 1);
  const Tensor ya = forward(n, x, Mode::Eval), yb = forward(*m, x, Mode::Eval);
  for (std::size_t i = 0; i < ya.size(); ++i) ASSERT_EQ(ya[i], yb[i]);
}

INSTANTIATE_TEST_SUITE_P(Archs, EveryArch, ::testing::ValuesIn(arch_names()),
                         [](const auto& info) {
                           std::string s = info.param;
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(Arch, UnknownNameListsValidOnes) {
  try {
    named_arch("resnet", 1, Profile::Desk);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("alcnet"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("plainfcn"), std::string::npos);
  }
}

TEST(Arch, ParseRejectsMalformed) {
  EXPECT_THROW(ArchSpec::parse("mlc:3,2|blam|b=1"), std::invalid_argument);
  EXPECT_THROW(ArchSpec::parse("plain|glue|b=1"), std::invalid_argument);
  EXPECT_THROW(ArchSpec::parse("plain|add"), std::invalid_argument);
}

TEST(Arch, ProfileDilations) {
  EXPECT_EQ(default_dilations(Profile::Paper), (std::vector<int>{13, 17}));
  EXPECT_EQ(default_dlc_dilation(Profile::Paper), 13);
  EXPECT_EQ(parse_profile(to_string(Profile::Desk)), Profile::Desk);
  const ArchSpec a = named_arch("dlc-fpn", 1, Profile::Desk, std::vector<int>{5, 7});
  EXPECT_EQ(a.same_layer.dilations.rates(), std::vector<int>{5});
}

TEST(Census, ContrastRowsAreZeroAndAlcnetIsSmallerThanFpn) {
  for (Profile p : {Profile::Desk, Profile::Paper})
    for (int b = 1; b <= 4; ++b) {
      const auto bc = BackboneConfig::for_profile(p, b);
      Network alc(named_arch("alcnet", b, p), bc, 1), fpn(named_arch("fpn", b, p), bc, 1);
      EXPECT_LT(alc.num_params(), fpn.num_params()) << "b=" << b;
      for (const auto& row : alc.census())
        if (row.module.ends_with(".mlc")) EXPECT_EQ(row.params, 0u);
      std::size_t counted = 0;
      for (auto* prm : alc.parameters()) counted += prm->size();
      EXPECT_EQ(counted, alc.num_params());
    }
}

TEST(Census, DepthGrowsParameters) {
  EXPECT_LT(desk_net("alcnet", 1).num_params(), desk_net("alcnet", 2).num_params());
}

TEST(Network, SeedDeterminesWeights) {
  Network a = desk_net("alcnet", 1, 5), b = desk_net("alcnet", 1, 5), c = desk_net("alcnet", 1, 6);
  const Tensor x = random_tensor(Shape{1, 1, 32, 32}, 7, 0, 1);
  const Tensor ya = forward(a, x, Mode::Train), yb = forward(b, x, Mode::Train),
               yc = forward(c, x, Mode::Train);
  for (std::size_t i = 0; i < ya.size(); ++i) ASSERT_EQ(ya[i], yb[i]);
  bool differs = false;
  for (std::size_t i = 0; i < ya.size(); ++i) differs |= ya[i] != yc[i];
  EXPECT_TRUE(differs);
}

TEST(Network, EvalBeforeTrainingThrows) {
  Network n = desk_net("alcnet");
  EXPECT_THROW(forward(n, Tensor(Shape{1, 1, 32, 32}), Mode::Eval), std::logic_error);
}

TEST(Network, RejectsMultiChannelInput) {
  Network n = desk_net("fpn");
  EXPECT_THROW(forward(n, Tensor(Shape{1, 2, 32, 32}), Mode::Train), std::invalid_argument);
}

TEST(Network, AlcnetGradientsMatchFiniteDifferences) {
  Network n = desk_net("alcnet");
  const Tensor x = random_tensor(Shape{2, 1, 32, 32}, 8, 0, 1);
  const auto params = n.parameters();
  nn::GradCheckOptions o;
  o.max_coords = 4;
  const double err = nn::grad_check(
      [&](Graph& g) { return weighted_sum(g, n.forward(g, g.input(x), Mode::Train)); }, params, o);
  EXPECT_LT(err, 1e-4);
}

TEST(Checkpoint, RejectsGarbage) {
  std::stringstream bad("NOPE");
  EXPECT_THROW(load_checkpoint(bad), std::runtime_error);
  std::stringstream empty;
  EXPECT_THROW(load_checkpoint(empty), std::runtime_error);
}
