#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alcnet/fusion.hpp"

namespace alcnet::net {

using fusion::CensusRow;
using fusion::FusionKind;
using fusion::SameLayer;
using nn::Graph;
using nn::Mode;
using nn::Var;

enum class Profile { Desk, Paper };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view name);

struct BackboneConfig {
  int blocks = 3;
  std::array<int, 3> channels{16, 32, 64};
  int in_channels = 1;

  static BackboneConfig for_profile(Profile p, int blocks);

  void validate() const;
  /// "c=16,32,64;in=1" (the block count lives in the ArchSpec).
  std::string canonical() const;
  static BackboneConfig parse(std::string_view text, int blocks);

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// One network variant: same-layer transform × cross-layer fusion × depth.
struct ArchSpec {
  SameLayer same_layer{};
  FusionKind cross_layer = FusionKind::BLAM;
  int blocks = 3;
  /// 3×3 conv + BN + ReLU between the fused map and the head (FPN baseline).
  bool post_conv = false;

  void validate() const;
  /// e.g. "mlc:13,17|blam|b=3"; "|post" is appended when post_conv is set and
  /// "/max" follows the dilations for max-over-directions contrast.
  std::string canonical() const;
  static ArchSpec parse(std::string_view text);

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Ablation architecture names, in table order.
const std::vector<std::string>& arch_names();

/// Dilation rates used for MLC at the given profile ({13, 17} at paper scale).
std::vector<int> default_dilations(Profile p);
int default_dlc_dilation(Profile p);

/// Builds a named architecture. `dilations` overrides the profile default
/// (for dlc-fpn only the first rate is used). Throws std::invalid_argument
/// listing valid names for an unknown name.
ArchSpec named_arch(std::string_view name, int blocks, Profile profile,
                    std::optional<std::vector<int>> dilations = std::nullopt);

/// Pre-activation residual block: BN-ReLU-conv3×3-BN-ReLU-conv3×3 plus an
/// identity shortcut, or a strided 1×1 projection of the activated input when
/// the shape changes.
class ResidualBlock {
 public:
  ResidualBlock(const std::string& name, int in_channels, int out_channels,
                int stride, std::mt19937_64& rng);

  Var forward(Graph& g, Var x, Mode mode);
  void collect(nn::StateRefs& refs);
  std::size_t num_params() const;
  int stride() const { return conv1_.stride(); }

 private:
  nn::BatchNorm2d bn1_;
  nn::Conv2d conv1_;
  nn::BatchNorm2d bn2_;
  nn::Conv2d conv2_;
  std::unique_ptr<nn::Conv2d> projection_;
};

class Backbone {
 public:
  Backbone(const BackboneConfig& cfg, std::mt19937_64& rng);

  /// Stage outputs at full, 1/2 and 1/4 resolution. Each exposed output is
  /// BN + ReLU of the residual stream; the stream itself continues un-normalized.
  std::array<Var, 3> forward(Graph& g, Var image, Mode mode);
  void collect(nn::StateRefs& refs);
  void census(std::vector<CensusRow>& rows) const;
  int downsampling_sites() const;

 private:
  BackboneConfig cfg_;
  nn::Conv2d stem_;
  std::array<std::vector<std::unique_ptr<ResidualBlock>>, 3> stages_;
  std::vector<std::unique_ptr<nn::BatchNorm2d>> out_bn_;
};

/// Backbone -> per-stage same-layer transform -> cross-layer fusion ->
/// optional post conv -> BN -> 1×1 head to one channel. Outputs raw scores at the
/// input resolution; PlainFCN upsamples its stage-3 prediction ×4.
class Network {
 public:
  Network(ArchSpec arch, BackboneConfig backbone, std::uint64_t seed);

  Var forward(Graph& g, Var images, Mode mode);

  const ArchSpec& arch() const { return arch_; }
  const BackboneConfig& backbone_config() const { return backbone_cfg_; }

  nn::StateRefs state();
  std::vector<nn::Parameter*> parameters() { return state().params; }
  std::vector<CensusRow> census() const;
  std::size_t num_params() const;
  int downsampling_sites() const { return backbone_.downsampling_sites(); }

 private:
  ArchSpec arch_;
  BackboneConfig backbone_cfg_;
  std::mt19937_64 rng_;
  Backbone backbone_;
  std::unique_ptr<fusion::M2lcFusion> fusion_;
  std::unique_ptr<nn::Conv2d> post_conv_;
  std::unique_ptr<nn::BatchNorm2d> post_bn_;
  nn::BatchNorm2d head_bn_;
  nn::Conv2d head_;
  nn::Bias head_bias_;
};

/// Sum of census rows.
std::size_t census_total(const std::vector<CensusRow>& rows);

// ---------------------------------------------------------------------------
// Checkpoints
//
//   "ALCN" | u32 version | str arch | str backbone | u32 count |
//   count × (str name | u32 rank | rank × u32 dim | f64 payload)
//
// All integers and floats little-endian; str is a u32 length then bytes.
// Batch-norm running statistics are stored as "<bn>.running_mean" and
// "<bn>.running_var" entries once initialised.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& os, Network& net);
void save_checkpoint(const std::filesystem::path& path, Network& net);

/// Reads only the header; useful to validate an arch before loading.
ArchSpec read_checkpoint_arch(const std::filesystem::path& path);

std::unique_ptr<Network> load_checkpoint(std::istream& is);
std::unique_ptr<Network> load_checkpoint(const std::filesystem::path& path);

}  // namespace alcnet::net
