#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "alcnet/data.hpp"
#include "helpers.hpp"

using namespace alcnet;
using nn::Shape;
using nn::Tensor;
using namespace alcnet::data;
using alcnet::testing::random_image;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("alcnet_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::pair<double, double> centroid(const BinaryMask& m) {
  double si = 0, sj = 0, n = 0;
  for (int i = 0; i < m.height(); ++i)
    for (int j = 0; j < m.width(); ++j)
      if (m.at(i, j)) {
        si += i;
        sj += j;
        ++n;
      }
  return {si / n, sj / n};
}

}  // namespace

using ImageIo = TempDir;

TEST_F(ImageIo, PgmRoundTripIsBitIdentical) {
  for (int maxval : {255, 65535}) {
    GrayImage img = random_image(7, 9, 1);
    quantize(img, maxval);
    write_pgm(dir_ / "a.pgm", img, maxval);
    const GrayImage back = read_image(dir_ / "a.pgm");
    ASSERT_EQ(back.height(), 7);
    for (std::size_t i = 0; i < img.size(); ++i) ASSERT_EQ(back.pixels()[i], img.pixels()[i]);
  }
}

TEST_F(ImageIo, PngRoundTripIsBitIdentical) {
  GrayImage img = random_image(5, 11, 2);
  quantize(img);
  write_png(dir_ / "a.png", img);
  const GrayImage back = read_image(dir_ / "a.png");
  for (std::size_t i = 0; i < img.size(); ++i) ASSERT_EQ(back.pixels()[i], img.pixels()[i]);
}

TEST_F(ImageIo, SixteenBitMaxNormalizesToOne) {
  std::ofstream(dir_ / "w.pgm", std::ios::binary) << "P5\n2 1\n65535\n" << '\xff' << '\xff'
                                                  << '\x80' << '\x00';
  const GrayImage img = read_image(dir_ / "w.pgm");
  EXPECT_EQ(img.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(img.at(0, 1), 32768.0 / 65535.0);
}

TEST_F(ImageIo, AsciiGraymapAndComments) {
  std::ofstream(dir_ / "a.pgm") << "P2\n# comment\n3 1\n4\n0 2 4\n";
  const GrayImage img = read_image(dir_ / "a.pgm");
  EXPECT_EQ(img.at(0, 1), 0.5);
  EXPECT_EQ(img.at(0, 2), 1.0);
}

TEST_F(ImageIo, MaskIsNonzeroForeground) {
  std::ofstream(dir_ / "m.pgm") << "P2\n3 1\n255\n0 1 255\n";
  const BinaryMask m = read_mask(dir_ / "m.pgm");
  EXPECT_EQ(m.at(0, 0), 0);
  EXPECT_EQ(m.at(0, 1), 1);
  EXPECT_EQ(m.at(0, 2), 1);
  write_mask_pgm(dir_ / "m2.pgm", m);
  EXPECT_EQ(read_mask(dir_ / "m2.pgm"), m);
}

TEST_F(ImageIo, RejectsMissingAndMalformedFiles) {
  EXPECT_THROW(read_image(dir_ / "nope.pgm"), std::runtime_error);
  std::ofstream(dir_ / "bad.pgm") << "P7\n";
  EXPECT_THROW(read_image(dir_ / "bad.pgm"), std::runtime_error);
  std::ofstream(dir_ / "short.pgm", std::ios::binary) << "P5\n4 4\n255\n" << "ab";
  EXPECT_THROW(read_image(dir_ / "short.pgm"), std::runtime_error);
}

using Manifests = TempDir;

TEST_F(Manifests, SaveLoadAndSizeMismatchNamesId) {
  GrayImage img(4, 4, 0.5);
  write_pgm(dir_ / "img.pgm", img);
  write_mask_pgm(dir_ / "ok.pgm", BinaryMask(4, 4, 1));
  write_mask_pgm(dir_ / "bad.pgm", BinaryMask(4, 5));
  Manifest m{Split::Val, {{"good", "img.pgm", "ok.pgm"}, {"frame_17", "img.pgm", "bad.pgm"}}};
  save_manifest(dir_ / "val.tsv", m);
  const Manifest back = load_manifest(dir_ / "val.tsv");
  EXPECT_EQ(back.split, Split::Val);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(load_sample(back.entries[0]).mask.count(), 16u);
  try {
    load_sample(back.entries[1]);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("frame_17"), std::string::npos);
  }
}

TEST_F(Manifests, DuplicatesAndOverlapsAreRejected) {
  std::ofstream(dir_ / "train.tsv") << "a\tx.pgm\ty.pgm\na\tx.pgm\ty.pgm\n";
  EXPECT_THROW(load_manifest(dir_ / "train.tsv"), std::runtime_error);
  const Manifest a{Split::Train, {{"x", "1", "1"}}}, b{Split::Test, {{"x", "2", "2"}}};
  const Manifest both[] = {a, b};
  EXPECT_THROW(check_disjoint(both), std::invalid_argument);
  EXPECT_THROW(load_manifest(dir_ / "other.tsv"), std::exception);
  EXPECT_EQ(parse_split(to_string(Split::Test)), Split::Test);
}

TEST(Augment, CropAtOriginIsTopLeftWindow) {
  Sample s{random_image(6, 6, 3), BinaryMask(6, 6), "s"};
  const Sample c = crop(s, 0, 0, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(c.image.at(i, j), s.image.at(i, j));
  EXPECT_THROW(crop(s, 3, 0, 4), std::invalid_argument);
}

TEST(Augment, CentroidShiftsByCropOffset) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 8);
  for (int t = 0; t < 30; ++t) {
    Sample s{GrayImage(20, 20), BinaryMask(20, 20), "s"};
    const int ci = 9 + u(rng) % 3, cj = 8 + u(rng) % 4;
    s.mask.at(ci, cj) = s.mask.at(ci + 1, cj) = s.mask.at(ci, cj + 1) = 1;
    // Any window with top, left <= 6 and side 14 keeps the whole target.
    const int top = u(rng) % 7, left = u(rng) % 7;
    const auto [a, b] = centroid(s.mask);
    const auto [c, d] = centroid(crop(s, top, left, 14).mask);
    EXPECT_NEAR(c, a - top, 1e-12);
    EXPECT_NEAR(d, b - left, 1e-12);
  }
}

TEST(Augment, ProfileSizes) {
  const auto desk = AugmentConfig::for_profile(net::Profile::Desk);
  const auto paper = AugmentConfig::for_profile(net::Profile::Paper);
  EXPECT_EQ(desk.resize, 72);
  EXPECT_EQ(desk.crop, 64);
  EXPECT_EQ(paper.resize, 512);
  EXPECT_EQ(paper.crop, 480);
  AugmentConfig bad;
  bad.crop = 80;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Augment, StaysInUnitRangeAndKeepsTargets) {
  SynthConfig sc;
  sc.seed = 5;
  const auto cfg = AugmentConfig::for_profile(net::Profile::Desk);
  std::mt19937_64 rng(6);
  for (int k = 0; k < 40; ++k) {
    const Sample s = synth_sample(sc, k).sample;
    const Sample a = augment(s, cfg, rng);
    EXPECT_EQ(a.image.height(), 64);
    EXPECT_TRUE(a.mask.is_binary());
    for (double v : a.image.pixels()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
}

TEST(Resize, BilinearPreservesConstantsAndNearestKeepsBinary) {
  const GrayImage c = resize_bilinear(GrayImage(5, 7, 0.3), 9, 4);
  for (double v : c.pixels()) EXPECT_NEAR(v, 0.3, 1e-15);
  BinaryMask m(4, 4);
  m.at(1, 2) = 1;
  const BinaryMask r = resize_nearest(m, 8, 8);
  EXPECT_EQ(r.count(), 4u);
  EXPECT_EQ(r.at(2, 4), 1);
}

TEST(Synth, FlatBackgroundPeakEqualsAmplitude) {
  GrayImage img(21, 21, 0.0);
  BinaryMask mask(21, 21);
  const SynthTarget t{10.0, 10.0, 1.0, 0.45};
  render_targets(img, mask, std::span(&t, 1));
  double peak = 0;
  for (double v : img.pixels()) peak = std::max(peak, v);
  EXPECT_EQ(peak, 0.45);
  EXPECT_EQ(img.at(10, 10), 0.45);
  EXPECT_EQ(img.at(10, 14), 0.0);  // beyond 3σ
  EXPECT_EQ(mask.at(10, 10), 1);
}

TEST(Synth, MaskGrowsWithSigma) {
  std::size_t prev = 0;
  for (double sigma = 0.6; sigma <= 3.0; sigma += 0.1) {
    GrayImage img(31, 31);
    BinaryMask mask(31, 31);
    const SynthTarget t{15.3, 14.8, sigma, 0.5};
    render_targets(img, mask, std::span(&t, 1));
    EXPECT_GE(mask.count(), prev) << sigma;
    prev = mask.count();
  }
  EXPECT_GT(prev, 9u);
}

TEST(Synth, DeterministicAndMasksContainTargetPeaks) {
  SynthConfig sc;
  sc.seed = 9;
  for (int k = 0; k < 50; ++k) {
    const SynthSample a = synth_sample(sc, k), b = synth_sample(sc, k);
    EXPECT_EQ(a.sample.id, b.sample.id);
    EXPECT_TRUE(std::equal(a.sample.image.pixels().begin(), a.sample.image.pixels().end(),
                           b.sample.image.pixels().begin()));
    EXPECT_EQ(a.sample.mask, b.sample.mask);
    ASSERT_GT(a.sample.mask.count(), 0u);
    for (const auto& t : a.targets)
      EXPECT_EQ(a.sample.mask.at(static_cast<int>(std::lround(t.ci)),
                                 static_cast<int>(std::lround(t.cj))),
                1);
    for (double v : a.sample.image.pixels()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
  SynthConfig other = sc;
  other.seed = 10;
  EXPECT_NE(synth_sample(other, 0).sample.mask, synth_sample(sc, 0).sample.mask);
}

TEST(Synth, ConfigValidation) {
  SynthConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.counts(), (std::array<int, 3>{100, 40, 60}));
  c.count = 0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "empty dataset requested");
  }
  c = {};
  c.sigma_min = 0.3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.clutter = 0.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(parse_background("cloud-noise"), Background::Cloud);
  EXPECT_THROW(parse_background("sky"), std::invalid_argument);
}

using SynthFiles = TempDir;

TEST_F(SynthFiles, DatasetIsDeterministicAndDisjoint) {
  SynthConfig c;
  c.seed = 7;
  c.split_counts = std::array<int, 3>{6, 2, 3};
  const SynthSummary s1 = synth_dataset(c, dir_ / "one");
  synth_dataset(c, dir_ / "two");
  EXPECT_EQ(s1.counts, (std::array<int, 3>{6, 2, 3}));
  std::vector<Manifest> ms;
  for (const char* n : {"train.tsv", "val.tsv", "test.tsv"}) {
    EXPECT_EQ(slurp(dir_ / "one" / n), slurp(dir_ / "two" / n));
    ms.push_back(load_manifest(dir_ / "one" / n));
  }
  EXPECT_NO_THROW(check_disjoint(ms));
  for (const auto& e : ms[0].entries) {
    EXPECT_EQ(slurp(e.image), slurp(dir_ / "two" / "images" / e.image.filename()));
    EXPECT_EQ(slurp(e.mask), slurp(dir_ / "two" / "masks" / e.mask.filename()));
  }
  const auto samples = load_samples(ms[2]);
  ASSERT_EQ(samples.size(), 3u);
  const SynthSample direct = synth_sample(c, 8);
  EXPECT_EQ(samples[0].id, direct.sample.id);
  EXPECT_EQ(samples[0].mask, direct.sample.mask);
  for (std::size_t i = 0; i < direct.sample.image.size(); ++i)
    ASSERT_EQ(samples[0].image.pixels()[i], direct.sample.image.pixels()[i]);
}
