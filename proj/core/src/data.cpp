#include "alcnet/data.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace alcnet::data {

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "' (train|val|test)");
}

// ---- manifests ------------------------------------------------------------

Manifest load_manifest(const fs::path& path, Split split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  Manifest m;
  m.split = split;
  const fs::path base = path.parent_path();
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected id<TAB>image<TAB>mask");
    if (!seen.insert(cols[0]).second)
      throw std::runtime_error(path.string() + ": duplicate id " + cols[0]);
    fs::path img = cols[1], msk = cols[2];
    if (img.is_relative()) img = base / img;
    if (msk.is_relative()) msk = base / msk;
    m.entries.push_back({cols[0], img, msk});
  }
  return m;
}

Manifest load_manifest(const fs::path& path) {
  return load_manifest(path, parse_split(path.stem().string()));
}

void save_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  const fs::path base = path.parent_path();
  // Relative entries are already relative to the manifest directory.
  auto rel = [&](const fs::path& p) {
    if (p.is_relative()) return p.generic_string();
    const fs::path r = p.lexically_relative(base);
    return (r.empty() ? p : r).generic_string();
  };
  for (const auto& e : m.entries)
    out << e.id << '\t' << rel(e.image) << '\t' << rel(e.mask) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void check_disjoint(std::span<const Manifest> splits) {
  std::set<std::string> seen;
  for (const auto& m : splits)
    for (const auto& e : m.entries)
      if (!seen.insert(e.id).second)
        throw std::invalid_argument("id '" + e.id + "' appears in more than one split");
}

Sample load_sample(const ManifestEntry& entry) {
  Sample s;
  s.id = entry.id;
  s.image = read_image(entry.image);
  s.mask = read_mask(entry.mask);
  if (s.image.height() != s.mask.height() || s.image.width() != s.mask.width())
    throw std::runtime_error(
        "sample " + entry.id + ": image is " + std::to_string(s.image.height()) +
        "x" + std::to_string(s.image.width()) + " but mask is " +
        std::to_string(s.mask.height()) + "x" + std::to_string(s.mask.width()));
  return s;
}

std::vector<Sample> load_samples(const Manifest& m) {
  std::vector<Sample> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) out.push_back(load_sample(e));
  return out;
}

// ---- raster IO -------------------------------------------------------------

namespace {

struct Raster {
  int height = 0;
  int width = 0;
  int maxval = 255;
  std::vector<std::uint16_t> values;
};

std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int header_int(std::istream& in, const fs::path& path) {
  const std::string tok = next_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 1) throw std::invalid_argument(tok);
    return v;
  } catch (const std::logic_error&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
}

Raster read_pgm_raster(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5'))
    throw std::runtime_error(path.string() + ": not a P2/P5 graymap");
  Raster r;
  r.width = header_int(in, path);
  r.height = header_int(in, path);
  r.maxval = header_int(in, path);
  if (r.maxval > 65535)
    throw std::runtime_error(path.string() + ": maxval above 65535");
  const std::size_t n = static_cast<std::size_t>(r.height) * r.width;
  r.values.resize(n);
  if (magic[1] == '2') {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = next_token(in);
      if (tok.empty()) throw std::runtime_error(path.string() + ": truncated P2 data");
      r.values[i] = static_cast<std::uint16_t>(std::stoul(tok));
    }
  } else if (r.maxval < 256) {
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error(path.string() + ": truncated P5 data");
    std::copy(buf.begin(), buf.end(), r.values.begin());
  } else {
    std::vector<unsigned char> buf(2 * n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
    if (!in) throw std::runtime_error(path.string() + ": truncated P5 data");
    for (std::size_t i = 0; i < n; ++i)
      r.values[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  for (auto v : r.values)
    if (v > r.maxval) throw std::runtime_error(path.string() + ": value above maxval");
  return r;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Raster read_png_raster(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng init failed");
  }
  Raster r;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path.string() + ": PNG decode failed");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  r.width = static_cast<int>(png_get_image_width(png, info));
  r.height = static_cast<int>(png_get_image_height(png, info));
  depth = png_get_bit_depth(png, info);
  r.maxval = depth == 16 ? 65535 : 255;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * r.height);
  rows.resize(r.height);
  for (int i = 0; i < r.height; ++i) rows[i] = buf.data() + rowbytes * i;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(r.height) * r.width;
  if (rowbytes * r.height < n * (depth == 16 ? 2 : 1))
    throw std::runtime_error(path.string() + ": unexpected PNG layout");
  r.values.resize(n);
  for (int i = 0; i < r.height; ++i) {
    const unsigned char* row = rows[i];
    for (int j = 0; j < r.width; ++j) {
      r.values[static_cast<std::size_t>(i) * r.width + j] =
          depth == 16 ? static_cast<std::uint16_t>(row[2 * j] | (row[2 * j + 1] << 8))
                      : row[j];
    }
  }
  return r;
}

Raster read_raster(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  in.close();
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png_raster(path);
  return read_pgm_raster(path);
}

}  // namespace

GrayImage read_image(const fs::path& path) {
  const Raster r = read_raster(path);
  GrayImage img(r.height, r.width);
  const double scale = static_cast<double>(r.maxval);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = r.values[i] / scale;
  return img;
}

BinaryMask read_mask(const fs::path& path) {
  const Raster r = read_raster(path);
  BinaryMask m(r.height, r.width);
  auto bits = m.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = r.values[i] > 0 ? 1 : 0;
  return m;
}

namespace {

std::uint16_t quantize_value(double v, int maxval, const fs::path& path) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(path.string() + ": pixel outside [0,1]");
  return static_cast<std::uint16_t>(std::lround(v * maxval));
}

void write_p5(const fs::path& path, int height, int width, int maxval,
              const std::vector<std::uint16_t>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  if (maxval < 256) {
    std::vector<char> buf(values.begin(), values.end());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  } else {
    std::vector<char> buf(2 * values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      buf[2 * i] = static_cast<char>(values[i] >> 8);
      buf[2 * i + 1] = static_cast<char>(values[i] & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_pgm(const fs::path& path, const GrayImage& img, int maxval) {
  if (maxval != 255 && maxval != 65535)
    throw std::invalid_argument("write_pgm: maxval must be 255 or 65535");
  std::vector<std::uint16_t> values(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) values[i] = quantize_value(px[i], maxval, path);
  write_p5(path, img.height(), img.width(), maxval, values);
}

void write_mask_pgm(const fs::path& path, const BinaryMask& mask) {
  std::vector<std::uint16_t> values(mask.size());
  auto bits = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) values[i] = bits[i] ? 255 : 0;
  write_p5(path, mask.height(), mask.width(), 255, values);
}

void write_png(const fs::path& path, const GrayImage& img) {
  std::vector<unsigned char> buf(2 * img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto v = quantize_value(px[i], 65535, path);
    buf[2 * i] = static_cast<unsigned char>(v >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng init failed");
  }
  std::vector<png_bytep> rows(img.height());
  for (int i = 0; i < img.height(); ++i)
    rows[i] = buf.data() + static_cast<std::size_t>(2) * img.width() * i;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path.string() + ": PNG encode failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void quantize(GrayImage& img, int maxval) {
  for (double& v : img.pixels()) {
    v = std::clamp(v, 0.0, 1.0);
    v = static_cast<double>(std::lround(v * maxval)) / maxval;
  }
}

// ---- augmentation -----------------------------------------------------------

AugmentConfig AugmentConfig::for_profile(net::Profile p) {
  return p == net::Profile::Paper ? AugmentConfig{512, 480, 5}
                                  : AugmentConfig{72, 64, 5};
}

void AugmentConfig::validate() const {
  if (crop < 1 || resize < crop || max_redraws < 0)
    throw std::invalid_argument("augment: need 1 <= crop <= resize");
}

GrayImage resize_bilinear(const GrayImage& img, int height, int width) {
  GrayImage out(height, width);
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int i = 0; i < height; ++i) {
    const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = y - y0;
    for (int j = 0; j < width; ++j) {
      const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = x - x0;
      const double top = img.at(y0, x0) * (1 - fx) + img.at(y0, x1) * fx;
      const double bot = img.at(y1, x0) * (1 - fx) + img.at(y1, x1) * fx;
      out.at(i, j) = std::clamp(top * (1 - fy) + bot * fy, 0.0, 1.0);
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int height, int width) {
  BinaryMask out(height, width);
  for (int i = 0; i < height; ++i) {
    const int si = std::min(mask.height() - 1,
                            static_cast<int>((i + 0.5) * mask.height() / height));
    for (int j = 0; j < width; ++j) {
      const int sj = std::min(mask.width() - 1,
                              static_cast<int>((j + 0.5) * mask.width() / width));
      out.at(i, j) = mask.at(si, sj);
    }
  }
  return out;
}

Sample resize(const Sample& s, int size) {
  if (s.image.height() == size && s.image.width() == size) return s;
  return {resize_bilinear(s.image, size, size), resize_nearest(s.mask, size, size), s.id};
}

Sample crop(const Sample& s, int top, int left, int size) {
  if (top < 0 || left < 0 || top + size > s.image.height() ||
      left + size > s.image.width())
    throw std::invalid_argument("crop window outside the image");
  Sample out{GrayImage(size, size), BinaryMask(size, size), s.id};
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      out.image.at(i, j) = s.image.at(top + i, left + j);
      out.mask.at(i, j) = s.mask.at(top + i, left + j);
    }
  return out;
}

Sample augment(const Sample& s, const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const Sample big = resize(s, cfg.resize);
  std::uniform_int_distribution<int> off(0, cfg.resize - cfg.crop);
  const bool has_target = big.mask.count() > 0;
  Sample out;
  for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
    const int top = off(rng);
    const int left = off(rng);
    out = crop(big, top, left, cfg.crop);
    if (!has_target || out.mask.count() > 0) break;
  }
  return out;
}

// ---- synthetic data ---------------------------------------------------------

const char* to_string(Background b) {
  switch (b) {
    case Background::Flat: return "flat";
    case Background::Gradient: return "gradient";
    case Background::Cloud: return "cloud";
  }
  return "?";
}

Background parse_background(const std::string& s) {
  if (s == "flat") return Background::Flat;
  if (s == "gradient") return Background::Gradient;
  if (s == "cloud" || s == "cloud-noise") return Background::Cloud;
  throw std::invalid_argument("unknown background '" + s + "' (flat|gradient|cloud)");
}

void SynthConfig::validate() const {
  if (size < 8) throw std::invalid_argument("synth: size must be at least 8");
  if (targets_min < 1 || targets_max < targets_min)
    throw std::invalid_argument("synth: need 1 <= targets_min <= targets_max");
  if (!(amplitude_min > 0) || amplitude_max < amplitude_min || amplitude_max > 1)
    throw std::invalid_argument("synth: need 0 < amplitude_min <= amplitude_max <= 1");
  // Below about 0.6 px the half-amplitude contour can miss every pixel centre.
  if (!(sigma_min >= 0.6) || sigma_max < sigma_min)
    throw std::invalid_argument("synth: need 0.6 <= sigma_min <= sigma_max");
  if (2 * (std::ceil(3 * sigma_max) + 1) >= size)
    throw std::invalid_argument("synth: sigma_max too large for the image size");
  if (clutter < 0 || clutter > amplitude_min / 2)
    throw std::invalid_argument("synth: clutter must lie in [0, amplitude_min/2]");
  if (noise_sigma < 0 || background_level < 0 || background_level > 1)
    throw std::invalid_argument("synth: bad background level or noise");
  if (split_counts) {
    for (int c : *split_counts)
      if (c < 0) throw std::invalid_argument("synth: negative split count");
  } else if (count < 0) {
    throw std::invalid_argument("synth: negative count");
  }
  if (total() == 0) throw std::invalid_argument("empty dataset requested");
}

std::array<int, 3> SynthConfig::counts() const {
  if (split_counts) return *split_counts;
  const double sum = ratios[0] + ratios[1] + ratios[2];
  const int train = static_cast<int>(std::lround(count * ratios[0] / sum));
  const int val = std::min(count - train,
                           static_cast<int>(std::lround(count * ratios[1] / sum)));
  return {train, val, count - train - val};
}

int SynthConfig::total() const {
  const auto c = counts();
  return c[0] + c[1] + c[2];
}

GrayImage render_background(const SynthConfig& cfg, std::mt19937_64& rng) {
  const int n = cfg.size;
  GrayImage img(n, n, cfg.background_level);
  if (cfg.clutter == 0.0 || cfg.background == Background::Flat) return img;
  if (cfg.background == Background::Gradient) {
    std::uniform_real_distribution<double> ang(0.0, 2 * std::numbers::pi);
    const double a = ang(rng);
    const double dy = std::sin(a), dx = std::cos(a);
    const double half = (n - 1) / 2.0;
    const double reach = half * (std::abs(dx) + std::abs(dy));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        img.at(i, j) += cfg.clutter * ((i - half) * dy + (j - half) * dx) / reach;
    return img;
  }
  // Cloud: coarse Gaussian lattice upsampled bilinearly, rescaled to ±clutter.
  const int cells = std::max(2, n / 8 + 1);
  std::normal_distribution<double> nd(0.0, 1.0);
  GrayImage coarse(cells, cells);
  for (double& v : coarse.pixels()) v = nd(rng);
  double lo = coarse.pixels()[0], hi = lo;
  for (double v : coarse.pixels()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double& v : coarse.pixels()) v = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  const GrayImage smooth = resize_bilinear(coarse, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      img.at(i, j) += cfg.clutter * (2 * smooth.at(i, j) - 1);
  return img;
}

void render_targets(GrayImage& img, BinaryMask& mask,
                    std::span<const SynthTarget> targets) {
  for (const auto& t : targets) {
    const double r = 3 * t.sigma;
    const int i0 = std::max(0, static_cast<int>(std::floor(t.ci - r)));
    const int i1 = std::min(img.height() - 1, static_cast<int>(std::ceil(t.ci + r)));
    const int j0 = std::max(0, static_cast<int>(std::floor(t.cj - r)));
    const int j1 = std::min(img.width() - 1, static_cast<int>(std::ceil(t.cj + r)));
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j) {
        const double d2 = (i - t.ci) * (i - t.ci) + (j - t.cj) * (j - t.cj);
        if (d2 > r * r) continue;
        const double v = t.amplitude * std::exp(-d2 / (2 * t.sigma * t.sigma));
        img.at(i, j) += v;
        if (v > t.amplitude / 2) mask.at(i, j) = 1;
      }
  }
}

SynthSample synth_sample(const SynthConfig& cfg, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x51c7u};
  std::mt19937_64 rng(seq);
  SynthSample out;
  char id[32];
  std::snprintf(id, sizeof id, "synth_%05d", index);
  out.sample.id = id;
  out.sample.image = render_background(cfg, rng);
  out.sample.mask = BinaryMask(cfg.size, cfg.size);

  std::uniform_int_distribution<int> count(cfg.targets_min, cfg.targets_max);
  std::uniform_real_distribution<double> amp(cfg.amplitude_min, cfg.amplitude_max);
  std::uniform_real_distribution<double> sig(cfg.sigma_min, cfg.sigma_max);
  const int k = count(rng);
  for (int t = 0; t < k; ++t) {
    SynthTarget tg;
    tg.sigma = sig(rng);
    tg.amplitude = amp(rng);
    const double margin = std::ceil(3 * tg.sigma) + 1;
    std::uniform_real_distribution<double> pos(margin, cfg.size - 1 - margin);
    tg.ci = pos(rng);
    tg.cj = pos(rng);
    out.targets.push_back(tg);
  }
  render_targets(out.sample.image, out.sample.mask, out.targets);
  if (cfg.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : out.sample.image.pixels()) v += noise(rng);
  }
  quantize(out.sample.image);
  return out;
}

SynthSummary synth_dataset(const SynthConfig& cfg, const fs::path& dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (!ec) fs::create_directories(dir / "masks", ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  SynthSummary summary;
  summary.counts = cfg.counts();
  int index = 0;
  for (int s = 0; s < 3; ++s) {
    Manifest m;
    m.split = static_cast<Split>(s);
    for (int k = 0; k < summary.counts[s]; ++k, ++index) {
      const SynthSample smp = synth_sample(cfg, index);
      const fs::path img = dir / "images" / (smp.sample.id + ".pgm");
      const fs::path msk = dir / "masks" / (smp.sample.id + ".pgm");
      write_pgm(img, smp.sample.image);
      write_mask_pgm(msk, smp.sample.mask);
      m.entries.push_back({smp.sample.id, img.lexically_relative(dir), msk.lexically_relative(dir)});
      summary.targets += smp.targets.size();
    }
    summary.manifests[s] = dir / (std::string(to_string(m.split)) + ".tsv");
    save_manifest(summary.manifests[s], m);
  }
  return summary;
}

}  // namespace alcnet::data
