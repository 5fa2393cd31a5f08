#pragma once

#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alcnet/contrast.hpp"
#include "alcnet/layers.hpp"

namespace alcnet::fusion {

using nn::Graph;
using nn::Mode;
using nn::Var;

/// Cross-layer integration schemes:
///   Add   X + Y
///   Max   max(X, Y)
///   BLAM  X + L(X) ⊗ Y
///   BGAM  X + G(X) ⊗ Y
///   TLAM  L(X) ⊗ X + Y
///   None  no cross-layer path
/// X is the shallow (low-level) map, Y the deeper map after channel
/// adjustment and upsampling.
enum class FusionKind { None, Add, Max, BLAM, BGAM, TLAM };

std::string_view to_string(FusionKind kind);
FusionKind parse_fusion_kind(std::string_view name);
bool uses_attention(FusionKind kind);

/// Point-wise bottleneck C -> C/4 -> C with BN, ReLU and a sigmoid gate.
/// The local variant keeps the C×H×W shape; the global variant pools first
/// and yields C×1×1.
class ChannelAttention {
 public:
  ChannelAttention(const std::string& name, int channels, bool global,
                   std::mt19937_64& rng);

  Var forward(Graph& g, Var x, Mode mode);
  void collect(nn::StateRefs& refs);
  std::size_t num_params() const;
  int channels() const { return channels_; }
  bool global() const { return global_; }

  nn::Conv2d& reduce_conv() { return conv1_; }
  nn::Conv2d& expand_conv() { return conv2_; }
  nn::BatchNorm2d& reduce_bn() { return bn1_; }
  nn::BatchNorm2d& expand_bn() { return bn2_; }

 private:
  int channels_;
  bool global_;
  nn::Conv2d conv1_;
  nn::BatchNorm2d bn1_;
  nn::Conv2d conv2_;
  nn::BatchNorm2d bn2_;
};

/// L(X); `attention` must be a local ChannelAttention.
Var local_attention(Graph& g, Var x, ChannelAttention& attention, Mode mode);

/// Combines same-shape maps per `kind`. Attention kinds require `attention`
/// (local for BLAM/TLAM, global for BGAM).
Var fuse(Graph& g, Var x, Var y, FusionKind kind, ChannelAttention* attention,
         Mode mode);

/// Same-layer transform applied to each stage before fusion.
struct SameLayer {
  enum class Kind { Plain, DLC, MLC };
  Kind kind = Kind::Plain;
  contrast::DilationSet dilations{};
  nn::Reduction reduction = nn::Reduction::Min;

  static SameLayer plain() { return {}; }
  static SameLayer dlc(int d) {
    return {Kind::DLC, contrast::DilationSet({d}), nn::Reduction::Min};
  }
  static SameLayer mlc(std::vector<int> rates) {
    return {Kind::MLC, contrast::DilationSet(std::move(rates)),
            nn::Reduction::Min};
  }

  Var apply(Graph& g, Var x) const;
  friend bool operator==(const SameLayer&, const SameLayer&) = default;
};

struct CensusRow {
  std::string module;
  std::size_t params;
};

/// Right fold over stage maps ordered shallow to deep: the deepest
/// transformed map is channel-adjusted (1×1 conv), upsampled to the next
/// shallower resolution and fused into it, repeating until stage 1.
class M2lcFusion {
 public:
  M2lcFusion(const std::string& name, std::vector<int> stage_channels,
             SameLayer same_layer, FusionKind kind, std::mt19937_64& rng);

  Var forward(Graph& g, std::span<const Var> stages, Mode mode);
  void collect(nn::StateRefs& refs);
  void census(std::vector<CensusRow>& rows) const;
  std::size_t num_sites() const { return adjust_.size(); }
  FusionKind kind() const { return kind_; }

 private:
  std::string name_;
  std::vector<int> channels_;
  SameLayer same_;
  FusionKind kind_;
  // site s fuses stage s with the folded result of stages s+1..L.
  std::vector<std::unique_ptr<nn::Conv2d>> adjust_;
  std::vector<std::unique_ptr<ChannelAttention>> attention_;
};

}  // namespace alcnet::fusion
