#include "alcnet/fusion.hpp"

#include <stdexcept>

namespace alcnet::fusion {

std::string_view to_string(FusionKind kind) {
  switch (kind) {
    case FusionKind::None: return "none";
    case FusionKind::Add: return "add";
    case FusionKind::Max: return "max";
    case FusionKind::BLAM: return "blam";
    case FusionKind::BGAM: return "bgam";
    case FusionKind::TLAM: return "tlam";
  }
  return "none";
}

FusionKind parse_fusion_kind(std::string_view name) {
  for (auto k : {FusionKind::None, FusionKind::Add, FusionKind::Max,
                 FusionKind::BLAM, FusionKind::BGAM, FusionKind::TLAM})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown fusion kind '" + std::string(name) +
                              "'");
}

bool uses_attention(FusionKind kind) {
  return kind == FusionKind::BLAM || kind == FusionKind::BGAM ||
         kind == FusionKind::TLAM;
}

namespace {
int bottleneck_channels(int channels) {
  if (channels < 4 || channels % 4 != 0)
    throw std::invalid_argument("attention: channel count " +
                                std::to_string(channels) +
                                " is not divisible by 4");
  return channels / 4;
}
}  // namespace

ChannelAttention::ChannelAttention(const std::string& name, int channels,
                                   bool global, std::mt19937_64& rng)
    : channels_(channels),
      global_(global),
      conv1_(name + ".pw1", channels, bottleneck_channels(channels), 1, 1, rng),
      bn1_(name + ".bn1", channels / 4),
      conv2_(name + ".pw2", channels / 4, channels, 1, 1, rng),
      bn2_(name + ".bn2", channels) {}

Var ChannelAttention::forward(Graph& g, Var x, Mode mode) {
  if (g.value(x).channels() != channels_)
    throw std::invalid_argument(
        "attention: expected " + std::to_string(channels_) + " channels, got " +
        std::to_string(g.value(x).channels()));
  Var h = global_ ? nn::global_avg_pool(g, x) : x;
  h = nn::relu(g, bn1_.forward(g, conv1_.forward(g, h), mode));
  h = bn2_.forward(g, conv2_.forward(g, h), mode);
  return nn::sigmoid(g, h);
}

void ChannelAttention::collect(nn::StateRefs& refs) {
  conv1_.collect(refs);
  bn1_.collect(refs);
  conv2_.collect(refs);
  bn2_.collect(refs);
}

std::size_t ChannelAttention::num_params() const {
  return conv1_.num_params() + bn1_.num_params() + conv2_.num_params() +
         bn2_.num_params();
}

Var local_attention(Graph& g, Var x, ChannelAttention& attention, Mode mode) {
  if (attention.global())
    throw std::invalid_argument("local_attention: got a global module");
  return attention.forward(g, x, mode);
}

Var fuse(Graph& g, Var x, Var y, FusionKind kind, ChannelAttention* attention,
         Mode mode) {
  nn::require_same_shape(g.value(x).shape(), g.value(y).shape(), "fuse");
  if (uses_attention(kind) && attention == nullptr)
    throw std::invalid_argument("fuse: " + std::string(to_string(kind)) +
                                " requires attention weights");
  switch (kind) {
    case FusionKind::Add:
      return nn::add(g, x, y);
    case FusionKind::Max:
      return nn::maximum(g, x, y);
    case FusionKind::BLAM:
      return nn::add(g, x, nn::mul(g, local_attention(g, x, *attention, mode), y));
    case FusionKind::TLAM:
      return nn::add(g, nn::mul(g, local_attention(g, x, *attention, mode), x), y);
    case FusionKind::BGAM: {
      if (!attention->global())
        throw std::invalid_argument("fuse: bgam requires global attention");
      const auto& s = g.value(x).shape();
      Var w = nn::expand_spatial(g, attention->forward(g, x, mode), s.h, s.w);
      return nn::add(g, x, nn::mul(g, w, y));
    }
    case FusionKind::None:
      break;
  }
  throw std::invalid_argument("fuse: kind 'none' has no cross-layer formula");
}

Var SameLayer::apply(Graph& g, Var x) const {
  switch (kind) {
    case Kind::Plain:
      return x;
    case Kind::DLC:
      dilations.validate_for(g.value(x).height(), g.value(x).width());
      return contrast::dlc(g, x, dilations.rates().front(), reduction);
    case Kind::MLC:
      return contrast::mlc(g, x, dilations, reduction);
  }
  return x;
}

M2lcFusion::M2lcFusion(const std::string& name, std::vector<int> stage_channels,
                       SameLayer same_layer, FusionKind kind,
                       std::mt19937_64& rng)
    : name_(name),
      channels_(std::move(stage_channels)),
      same_(std::move(same_layer)),
      kind_(kind) {
  if (kind_ == FusionKind::None) {
    if (channels_.size() != 1)
      throw std::invalid_argument(
          "m2lc: kind 'none' takes exactly one stage");
    return;
  }
  if (channels_.size() < 2)
    throw std::invalid_argument("m2lc: fused kinds need at least 2 stages");
  for (std::size_t s = 0; s + 1 < channels_.size(); ++s) {
    const std::string site = name_ + ".site" + std::to_string(s + 1);
    adjust_.push_back(std::make_unique<nn::Conv2d>(
        site + ".adjust", channels_[s + 1], channels_[s], 1, 1, rng));
    if (uses_attention(kind_))
      attention_.push_back(std::make_unique<ChannelAttention>(
          site + ".attention", channels_[s], kind_ == FusionKind::BGAM, rng));
  }
}

Var M2lcFusion::forward(Graph& g, std::span<const Var> stages, Mode mode) {
  if (stages.size() != channels_.size())
    throw std::invalid_argument("m2lc: expected " +
                                std::to_string(channels_.size()) +
                                " stage maps, got " +
                                std::to_string(stages.size()));
  Var acc = same_.apply(g, stages.back());
  for (std::size_t s = stages.size() - 1; s-- > 0;) {
    Var x = same_.apply(g, stages[s]);
    Var y = adjust_[s]->forward(g, acc);
    const int factor = g.value(x).height() / g.value(y).height();
    if (factor * g.value(y).height() != g.value(x).height() ||
        factor * g.value(y).width() != g.value(x).width())
      throw std::invalid_argument(
          "m2lc: deeper stage resolution does not divide the shallower one");
    if (factor > 1) y = nn::upsample_nearest(g, y, factor);
    acc = fuse(g, x, y, kind_,
               attention_.empty() ? nullptr : attention_[s].get(), mode);
  }
  return acc;
}

void M2lcFusion::collect(nn::StateRefs& refs) {
  for (std::size_t s = 0; s < adjust_.size(); ++s) {
    adjust_[s]->collect(refs);
    if (!attention_.empty()) attention_[s]->collect(refs);
  }
}

void M2lcFusion::census(std::vector<CensusRow>& rows) const {
  const char* same = same_.kind == SameLayer::Kind::Plain ? "plain"
                     : same_.kind == SameLayer::Kind::DLC ? "dlc"
                                                          : "mlc";
  for (std::size_t s = 0; s < channels_.size(); ++s)
    if (same_.kind != SameLayer::Kind::Plain)
      rows.push_back({name_ + ".stage" + std::to_string(s + 1) + "." + same, 0});
  for (std::size_t s = 0; s < adjust_.size(); ++s) {
    const std::string site = name_ + ".site" + std::to_string(s + 1);
    rows.push_back({site + ".adjust", adjust_[s]->num_params()});
    if (!attention_.empty())
      rows.push_back({site + ".attention", attention_[s]->num_params()});
  }
}

}  // namespace alcnet::fusion
