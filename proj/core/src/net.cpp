#include "alcnet/net.hpp"

#include <bit>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace alcnet::net {

std::string_view to_string(Profile p) {
  return p == Profile::Desk ? "desk" : "paper";
}

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw std::invalid_argument("unknown profile '" + std::string(name) +
                              "' (expected desk or paper)");
}

namespace {

// Head bias starts at logit(0.01) so initial predictions match a sparse
// foreground instead of p = 0.5 everywhere.
const double kHeadBiasInit = std::log(0.01 / 0.99);

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view s, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("cannot parse ") + what + " from '" +
                                std::string(s) + "'");
  return v;
}

std::vector<int> parse_int_list(std::string_view s, const char* what) {
  std::vector<int> out;
  for (auto part : split(s, ',')) out.push_back(parse_int(part, what));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

BackboneConfig BackboneConfig::for_profile(Profile p, int blocks) {
  BackboneConfig cfg;
  cfg.blocks = blocks;
  if (p == Profile::Desk) cfg.channels = {8, 16, 32};
  return cfg;
}

void BackboneConfig::validate() const {
  if (blocks < 1 || blocks > 4)
    throw std::invalid_argument("backbone: blocks per stage must be in 1..4, got " +
                                std::to_string(blocks));
  for (int c : channels)
    if (c < 4 || c % 4 != 0)
      throw std::invalid_argument(
          "backbone: stage channels must be positive multiples of 4");
  if (in_channels < 1) throw std::invalid_argument("backbone: in_channels < 1");
}

std::string BackboneConfig::canonical() const {
  return "c=" + std::to_string(channels[0]) + "," + std::to_string(channels[1]) +
         "," + std::to_string(channels[2]) + ";in=" + std::to_string(in_channels);
}

BackboneConfig BackboneConfig::parse(std::string_view text, int blocks) {
  BackboneConfig cfg;
  cfg.blocks = blocks;
  for (auto part : split(text, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("backbone config: malformed '" +
                                  std::string(part) + "'");
    const auto key = part.substr(0, eq);
    const auto val = part.substr(eq + 1);
    if (key == "c") {
      const auto c = parse_int_list(val, "channels");
      if (c.size() != 3)
        throw std::invalid_argument("backbone config: need 3 channel counts");
      cfg.channels = {c[0], c[1], c[2]};
    } else if (key == "in") {
      cfg.in_channels = parse_int(val, "in_channels");
    } else {
      throw std::invalid_argument("backbone config: unknown key '" +
                                  std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void ArchSpec::validate() const {
  if (blocks < 1 || blocks > 4)
    throw std::invalid_argument("arch: b must be in 1..4, got " +
                                std::to_string(blocks));
  if (cross_layer == FusionKind::None &&
      same_layer.kind != SameLayer::Kind::Plain)
    throw std::invalid_argument(
        "arch: cross-layer 'none' is only defined for the plain FCN");
  if (same_layer.kind == SameLayer::Kind::DLC && same_layer.dilations.size() != 1)
    throw std::invalid_argument("arch: dlc takes exactly one dilation rate");
  if (same_layer.kind != SameLayer::Kind::Plain && same_layer.dilations.size() == 0)
    throw std::invalid_argument("arch: contrast transform needs dilation rates");
}

std::string ArchSpec::canonical() const {
  std::string s;
  switch (same_layer.kind) {
    case SameLayer::Kind::Plain: s = "plain"; break;
    case SameLayer::Kind::DLC: s = "dlc:" + join(same_layer.dilations.rates()); break;
    case SameLayer::Kind::MLC: s = "mlc:" + join(same_layer.dilations.rates()); break;
  }
  if (same_layer.kind != SameLayer::Kind::Plain &&
      same_layer.reduction == nn::Reduction::Max)
    s += "/max";
  s += "|" + std::string(fusion::to_string(cross_layer));
  s += "|b=" + std::to_string(blocks);
  if (post_conv) s += "|post";
  return s;
}

ArchSpec ArchSpec::parse(std::string_view text) {
  const auto parts = split(text, '|');
  if (parts.size() < 3 || parts.size() > 4)
    throw std::invalid_argument("arch string '" + std::string(text) +
                                "' is not of the form same|cross|b=N[|post]");
  ArchSpec spec;
  std::string_view same = parts[0];
  nn::Reduction red = nn::Reduction::Min;
  if (const auto slash = same.find('/'); slash != std::string_view::npos) {
    const auto r = same.substr(slash + 1);
    if (r == "max")
      red = nn::Reduction::Max;
    else if (r != "min")
      throw std::invalid_argument("arch: unknown reduction '" + std::string(r) + "'");
    same = same.substr(0, slash);
  }
  if (same == "plain") {
    spec.same_layer = SameLayer::plain();
  } else if (same.starts_with("dlc:")) {
    const auto rates = parse_int_list(same.substr(4), "dilation");
    if (rates.size() != 1)
      throw std::invalid_argument("arch: dlc takes exactly one dilation rate");
    spec.same_layer = SameLayer::dlc(rates[0]);
  } else if (same.starts_with("mlc:")) {
    spec.same_layer = SameLayer::mlc(parse_int_list(same.substr(4), "dilation"));
  } else {
    throw std::invalid_argument("arch: unknown same-layer transform '" +
                                std::string(same) + "'");
  }
  spec.same_layer.reduction = red;
  spec.cross_layer = fusion::parse_fusion_kind(parts[1]);
  if (!parts[2].starts_with("b="))
    throw std::invalid_argument("arch: expected b=N, got '" + std::string(parts[2]) + "'");
  spec.blocks = parse_int(parts[2].substr(2), "b");
  if (parts.size() == 4) {
    if (parts[3] != "post")
      throw std::invalid_argument("arch: unknown flag '" + std::string(parts[3]) + "'");
    spec.post_conv = true;
  }
  spec.validate();
  return spec;
}

const std::vector<std::string>& arch_names() {
  static const std::vector<std::string> names{
      "plainfcn", "fpn", "dlc-fpn", "mlc-fpn",
      "max-fpn",  "tla-fpn", "bga-fpn", "alcnet"};
  return names;
}

std::vector<int> default_dilations(Profile p) {
  return p == Profile::Paper ? std::vector<int>{13, 17} : std::vector<int>{2, 3};
}

int default_dlc_dilation(Profile p) { return p == Profile::Paper ? 13 : 2; }

ArchSpec named_arch(std::string_view name, int blocks, Profile profile,
                    std::optional<std::vector<int>> dilations) {
  const std::vector<int> rates = dilations.value_or(default_dilations(profile));
  const int single =
      dilations && !dilations->empty() ? dilations->front() : default_dlc_dilation(profile);
  ArchSpec a;
  a.blocks = blocks;
  if (name == "plainfcn") {
    a.same_layer = SameLayer::plain();
    a.cross_layer = FusionKind::None;
  } else if (name == "fpn") {
    a.same_layer = SameLayer::plain();
    a.cross_layer = FusionKind::Add;
    a.post_conv = true;
  } else if (name == "dlc-fpn") {
    a.same_layer = SameLayer::dlc(single);
    a.cross_layer = FusionKind::Add;
  } else if (name == "mlc-fpn") {
    a.same_layer = SameLayer::mlc(rates);
    a.cross_layer = FusionKind::Add;
  } else if (name == "max-fpn") {
    a.same_layer = SameLayer::mlc(rates);
    a.cross_layer = FusionKind::Max;
  } else if (name == "tla-fpn") {
    a.same_layer = SameLayer::mlc(rates);
    a.cross_layer = FusionKind::TLAM;
  } else if (name == "bga-fpn") {
    a.same_layer = SameLayer::mlc(rates);
    a.cross_layer = FusionKind::BGAM;
  } else if (name == "alcnet") {
    a.same_layer = SameLayer::mlc(rates);
    a.cross_layer = FusionKind::BLAM;
  } else {
    std::string valid;
    for (const auto& n : arch_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown architecture '" + std::string(name) +
                                "'; valid names: " + valid);
  }
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------

ResidualBlock::ResidualBlock(const std::string& name, int in_channels,
                             int out_channels, int stride, std::mt19937_64& rng)
    : bn1_(name + ".bn1", in_channels),
      conv1_(name + ".conv1", in_channels, out_channels, 3, stride, rng),
      bn2_(name + ".bn2", out_channels),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1, rng) {
  if (in_channels != out_channels || stride != 1)
    projection_ = std::make_unique<nn::Conv2d>(name + ".proj", in_channels,
                                               out_channels, 1, stride, rng);
}

Var ResidualBlock::forward(Graph& g, Var x, Mode mode) {
  Var a = nn::relu(g, bn1_.forward(g, x, mode));
  Var shortcut = projection_ ? projection_->forward(g, a) : x;
  Var h = conv1_.forward(g, a);
  h = nn::relu(g, bn2_.forward(g, h, mode));
  h = conv2_.forward(g, h);
  return nn::add(g, h, shortcut);
}

void ResidualBlock::collect(nn::StateRefs& refs) {
  bn1_.collect(refs);
  conv1_.collect(refs);
  bn2_.collect(refs);
  conv2_.collect(refs);
  if (projection_) projection_->collect(refs);
}

std::size_t ResidualBlock::num_params() const {
  return bn1_.num_params() + conv1_.num_params() + bn2_.num_params() +
         conv2_.num_params() + (projection_ ? projection_->num_params() : 0);
}

Backbone::Backbone(const BackboneConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      stem_("backbone.stem", cfg.in_channels, cfg.channels[0], 3, 1, rng) {
  cfg_.validate();
  int in = cfg.channels[0];
  for (int s = 0; s < 3; ++s) {
    for (int k = 0; k < cfg.blocks; ++k) {
      const int stride = (s > 0 && k == 0) ? 2 : 1;
      stages_[s].push_back(std::make_unique<ResidualBlock>(
          "backbone.stage" + std::to_string(s + 1) + ".block" + std::to_string(k + 1),
          in, cfg.channels[s], stride, rng));
      in = cfg.channels[s];
    }
    out_bn_.push_back(std::make_unique<nn::BatchNorm2d>(
        "backbone.stage" + std::to_string(s + 1) + ".out_bn", cfg.channels[s]));
  }
}

std::array<Var, 3> Backbone::forward(Graph& g, Var image, Mode mode) {
  const auto& s = g.value(image).shape();
  if (s.c != cfg_.in_channels)
    throw std::invalid_argument("backbone: expected " +
                                std::to_string(cfg_.in_channels) +
                                " input channels, got " + std::to_string(s.c));
  if (s.h % 4 != 0 || s.w % 4 != 0)
    throw std::invalid_argument("backbone: input size " + std::to_string(s.h) +
                                "x" + std::to_string(s.w) +
                                " is not divisible by 4");
  Var x = stem_.forward(g, image);
  std::array<Var, 3> out;
  for (int st = 0; st < 3; ++st) {
    for (auto& block : stages_[st]) x = block->forward(g, x, mode);
    out[st] = nn::relu(g, out_bn_[st]->forward(g, x, mode));
  }
  return out;
}

void Backbone::collect(nn::StateRefs& refs) {
  stem_.collect(refs);
  for (auto& stage : stages_)
    for (auto& b : stage) b->collect(refs);
  for (auto& bn : out_bn_) bn->collect(refs);
}

void Backbone::census(std::vector<CensusRow>& rows) const {
  rows.push_back({"backbone.stem", stem_.num_params()});
  for (int s = 0; s < 3; ++s)
    for (std::size_t k = 0; k < stages_[s].size(); ++k)
      rows.push_back({"backbone.stage" + std::to_string(s + 1) + ".block" +
                          std::to_string(k + 1),
                      stages_[s][k]->num_params()});
  for (int s = 0; s < 3; ++s)
    rows.push_back({"backbone.stage" + std::to_string(s + 1) + ".out_bn",
                    out_bn_[s]->num_params()});
}

int Backbone::downsampling_sites() const {
  int n = stem_.stride() == 2 ? 1 : 0;
  for (const auto& stage : stages_)
    for (const auto& b : stage) n += b->stride() == 2 ? 1 : 0;
  return n;
}

Network::Network(ArchSpec arch, BackboneConfig backbone, std::uint64_t seed)
    : arch_(std::move(arch)),
      backbone_cfg_([&] {
        backbone.blocks = arch_.blocks;
        backbone.validate();
        arch_.validate();
        return backbone;
      }()),
      rng_(seed),
      backbone_(backbone_cfg_, rng_),
      head_bn_("head.bn", arch_.cross_layer == FusionKind::None
                              ? backbone_cfg_.channels[2]
                              : backbone_cfg_.channels[0]),
      head_("head.conv",
            arch_.cross_layer == FusionKind::None ? backbone_cfg_.channels[2]
                                                  : backbone_cfg_.channels[0],
            1, 1, 1, rng_),
      head_bias_("head", 1, kHeadBiasInit) {
  const auto& c = backbone_cfg_.channels;
  if (arch_.cross_layer == FusionKind::None) {
    fusion_ = std::make_unique<fusion::M2lcFusion>(
        "fusion", std::vector<int>{c[2]}, arch_.same_layer, FusionKind::None, rng_);
  } else {
    fusion_ = std::make_unique<fusion::M2lcFusion>(
        "fusion", std::vector<int>{c[0], c[1], c[2]}, arch_.same_layer,
        arch_.cross_layer, rng_);
  }
  if (arch_.post_conv) {
    const int ch = arch_.cross_layer == FusionKind::None ? c[2] : c[0];
    post_conv_ = std::make_unique<nn::Conv2d>("post.conv", ch, ch, 3, 1, rng_);
    post_bn_ = std::make_unique<nn::BatchNorm2d>("post.bn", ch);
  }
}

Var Network::forward(Graph& g, Var images, Mode mode) {
  const auto stages = backbone_.forward(g, images, mode);
  Var z;
  if (arch_.cross_layer == FusionKind::None) {
    const std::array<Var, 1> deepest{stages[2]};
    z = fusion_->forward(g, deepest, mode);
  } else {
    z = fusion_->forward(g, stages, mode);
  }
  if (post_conv_) z = nn::relu(g, post_bn_->forward(g, post_conv_->forward(g, z), mode));
  z = head_bn_.forward(g, z, mode);
  Var scores = head_bias_.forward(g, head_.forward(g, z));
  const int factor = g.value(images).height() / g.value(scores).height();
  if (factor > 1) scores = nn::upsample_nearest(g, scores, factor);
  return scores;
}

nn::StateRefs Network::state() {
  nn::StateRefs refs;
  backbone_.collect(refs);
  fusion_->collect(refs);
  if (post_conv_) {
    post_conv_->collect(refs);
    post_bn_->collect(refs);
  }
  head_bn_.collect(refs);
  head_.collect(refs);
  head_bias_.collect(refs);
  return refs;
}

std::vector<CensusRow> Network::census() const {
  std::vector<CensusRow> rows;
  backbone_.census(rows);
  fusion_->census(rows);
  if (post_conv_)
    rows.push_back({"post", post_conv_->num_params() + post_bn_->num_params()});
  rows.push_back({"head", head_bn_.num_params() + head_.num_params() +
                             head_bias_.num_params()});
  return rows;
}

std::size_t census_total(const std::vector<CensusRow>& rows) {
  return std::accumulate(rows.begin(), rows.end(), std::size_t{0},
                         [](std::size_t acc, const CensusRow& r) {
                           return acc + r.params;
                         });
}

std::size_t Network::num_params() const { return census_total(census()); }

// ---------------------------------------------------------------------------
// Checkpoint IO
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'L', 'C', 'N'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void need(std::istream& is, const char* what) {
  if (!is) throw std::runtime_error(std::string("checkpoint truncated while reading ") + what);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  need(is, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  need(is, "payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

std::string get_str(std::istream& is, const char* what) {
  const auto n = get_u32(is, what);
  if (n > (1u << 20)) throw std::runtime_error(std::string("checkpoint: implausible ") + what + " length");
  std::string s(n, '\0');
  is.read(s.data(), n);
  need(is, what);
  return s;
}

struct Entry {
  std::string name;
  nn::Tensor value;
};

std::vector<Entry> collect_entries(Network& net) {
  std::vector<Entry> out;
  auto refs = net.state();
  for (auto* p : refs.params) out.push_back({p->name(), p->value()});
  for (auto& [name, st] : refs.buffers) {
    if (!st->initialized) continue;
    const int c = static_cast<int>(st->running_mean.size());
    out.push_back({name + ".running_mean",
                   nn::Tensor(nn::Shape{1, c, 1, 1}, st->running_mean)});
    out.push_back({name + ".running_var",
                   nn::Tensor(nn::Shape{1, c, 1, 1}, st->running_var)});
  }
  return out;
}

void read_header(std::istream& is, ArchSpec& arch, BackboneConfig& bb) {
  char magic[4];
  is.read(magic, 4);
  need(is, "magic");
  if (!std::equal(magic, magic + 4, kMagic))
    throw std::runtime_error("not an ALCN checkpoint (bad magic)");
  const auto version = get_u32(is, "version");
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  arch = ArchSpec::parse(get_str(is, "arch"));
  bb = BackboneConfig::parse(get_str(is, "backbone"), arch.blocks);
}

}  // namespace

void save_checkpoint(std::ostream& os, Network& net) {
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_str(os, net.arch().canonical());
  put_str(os, net.backbone_config().canonical());
  const auto entries = collect_entries(net);
  put_u32(os, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_str(os, e.name);
    const auto& s = e.value.shape();
    put_u32(os, 4);
    for (int d : {s.n, s.c, s.h, s.w}) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : e.value.values()) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_checkpoint(os, net);
}

ArchSpec read_checkpoint_arch(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  ArchSpec arch;
  BackboneConfig bb;
  read_header(is, arch, bb);
  return arch;
}

std::unique_ptr<Network> load_checkpoint(std::istream& is) {
  ArchSpec arch;
  BackboneConfig bb;
  read_header(is, arch, bb);
  auto net = std::make_unique<Network>(arch, bb, 0);
  auto refs = net->state();
  std::map<std::string, nn::Parameter*> params;
  for (auto* p : refs.params) params.emplace(p->name(), p);
  std::map<std::string, nn::BatchNormState*> buffers;
  for (auto& [name, st] : refs.buffers) buffers.emplace(name, st);

  const auto count = get_u32(is, "entry count");
  std::size_t loaded = 0;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string name = get_str(is, "entry name");
    const auto rank = get_u32(is, "rank");
    if (rank != 4) throw std::runtime_error("checkpoint: entry " + name + " has rank " + std::to_string(rank));
    nn::Shape s;
    s.n = static_cast<int>(get_u32(is, "dim"));
    s.c = static_cast<int>(get_u32(is, "dim"));
    s.h = static_cast<int>(get_u32(is, "dim"));
    s.w = static_cast<int>(get_u32(is, "dim"));
    std::vector<double> values(s.numel());
    for (double& v : values) v = get_f64(is);
    nn::Tensor t(s, std::move(values));

    if (auto it = params.find(name); it != params.end()) {
      if (it->second->value().shape() != s)
        throw std::runtime_error("checkpoint: shape mismatch for " + name +
                                 " (arch/checkpoint mismatch)");
      it->second->value() = std::move(t);
      ++loaded;
      continue;
    }
    const auto dot = name.rfind('.');
    const std::string base = name.substr(0, dot);
    const std::string field = dot == std::string::npos ? "" : name.substr(dot + 1);
    auto bit = buffers.find(base);
    if (bit == buffers.end() || (field != "running_mean" && field != "running_var"))
      throw std::runtime_error("checkpoint: unknown entry " + name);
    auto& st = *bit->second;
    auto vals = std::vector<double>(t.values().begin(), t.values().end());
    if (field == "running_mean")
      st.running_mean = std::move(vals);
    else
      st.running_var = std::move(vals);
    st.initialized = !st.running_mean.empty() && !st.running_var.empty();
  }
  if (loaded != params.size())
    throw std::runtime_error("checkpoint: " + std::to_string(params.size() - loaded) +
                             " parameters missing");
  return net;
}

std::unique_ptr<Network> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return load_checkpoint(is);
}

}  // namespace alcnet::net
