#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "alcnet/image.hpp"
#include "alcnet/net.hpp"

namespace alcnet::data {

namespace fs = std::filesystem;

struct Sample {
  GrayImage image;
  BinaryMask mask;
  std::string id;
};

enum class Split { Train, Val, Test };
const char* to_string(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string id;
  fs::path image;
  fs::path mask;
};

/// One split of a dataset. Manifest files hold one `id<TAB>image<TAB>mask`
/// line per sample; relative paths resolve against the manifest's directory.
struct Manifest {
  Split split = Split::Train;
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const fs::path& path, Split split);
/// Infers the split from the file stem ("train", "val" or "test").
Manifest load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const Manifest& m);

/// Throws std::invalid_argument naming the first id that occurs twice.
void check_disjoint(std::span<const Manifest> splits);

Sample load_sample(const ManifestEntry& entry);
std::vector<Sample> load_samples(const Manifest& m);

// Image IO. Portable graymap (P2/P5, 8 or 16 bit) and PNG are read by
// content; intensities are divided by the format's maximum value.
GrayImage read_image(const fs::path& path);
/// Any nonzero pixel is foreground.
BinaryMask read_mask(const fs::path& path);

/// Quantizes to round(v·maxval) with maxval 255 or 65535 and writes binary P5.
void write_pgm(const fs::path& path, const GrayImage& img, int maxval = 65535);
/// 16-bit grayscale PNG.
void write_png(const fs::path& path, const GrayImage& img);
/// P5 with values {0, 255}.
void write_mask_pgm(const fs::path& path, const BinaryMask& mask);

/// Rounds every pixel onto the k / maxval grid so the image survives a
/// write_pgm / read_image round trip bit for bit.
void quantize(GrayImage& img, int maxval = 65535);

// Augmentation.
struct AugmentConfig {
  int resize = 72;
  int crop = 64;
  int max_redraws = 5;

  static AugmentConfig for_profile(net::Profile p);
  void validate() const;
};

/// Bilinear, half-pixel-centre sampling with edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int height, int width);
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);
Sample resize(const Sample& s, int size);
Sample crop(const Sample& s, int top, int left, int size);

/// Resize to cfg.resize², then a uniformly placed cfg.crop² window. A window
/// that loses every target pixel is re-drawn up to cfg.max_redraws times.
Sample augment(const Sample& s, const AugmentConfig& cfg, std::mt19937_64& rng);

// Synthetic SIRST-like data.
enum class Background { Flat, Gradient, Cloud };
const char* to_string(Background b);
Background parse_background(const std::string& s);

struct SynthConfig {
  int count = 200;
  int size = 64;
  int targets_min = 1;
  int targets_max = 2;
  double amplitude_min = 0.3;
  double amplitude_max = 0.6;
  double sigma_min = 0.8;
  double sigma_max = 1.4;
  Background background = Background::Cloud;
  double background_level = 0.2;
  double clutter = 0.1;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.5, 0.2, 0.3};
  /// Explicit train/val/test counts; overrides count and ratios.
  std::optional<std::array<int, 3>> split_counts;

  void validate() const;
  std::array<int, 3> counts() const;
  int total() const;
};

struct SynthTarget {
  double ci = 0.0;
  double cj = 0.0;
  double sigma = 1.0;
  double amplitude = 0.5;
};

/// Background only, before targets and noise.
GrayImage render_background(const SynthConfig& cfg, std::mt19937_64& rng);
/// Adds Gaussian blobs clipped at 3σ; the mask marks pixels where a single
/// target contributes more than half its amplitude.
void render_targets(GrayImage& img, BinaryMask& mask,
                    std::span<const SynthTarget> targets);

struct SynthSample {
  Sample sample;
  std::vector<SynthTarget> targets;
};

/// Deterministic in (cfg.seed, index).
SynthSample synth_sample(const SynthConfig& cfg, int index);

struct SynthSummary {
  std::array<int, 3> counts{};
  std::array<fs::path, 3> manifests;
  std::size_t targets = 0;
};

/// Writes images/, masks/ and train.tsv, val.tsv, test.tsv under dir.
/// Throws std::invalid_argument("empty dataset requested") for zero samples.
SynthSummary synth_dataset(const SynthConfig& cfg, const fs::path& dir);

}  // namespace alcnet::data
