#include "alcnet/contrast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace alcnet::contrast {

namespace {

int wrap(int v, int n) {
  const int r = v % n;
  return r < 0 ? r + n : r;
}

void check_offsets(const nn::Shape& s, Direction dir) {
  if (std::abs(dir.x) >= s.h || std::abs(dir.y) >= s.w)
    throw std::invalid_argument(
        "cyclic_shift: offset (" + std::to_string(dir.x) + "," +
        std::to_string(dir.y) + ") exceeds map size " + std::to_string(s.h) +
        "x" + std::to_string(s.w));
}

// Shifts one H×W plane; rows are rotated with two block copies each.
void shift_plane(const double* src, double* dst, int h, int w, Direction dir) {
  const int s = wrap(dir.y, w);
  for (int i = 0; i < h; ++i) {
    const double* row = src + static_cast<std::size_t>(wrap(i - dir.x, h)) * w;
    double* out = dst + static_cast<std::size_t>(i) * w;
    std::copy(row, row + (w - s), out + s);
    std::copy(row + (w - s), row + w, out);
  }
}

}  // namespace

std::array<Direction, 4> canonical_directions(int d) {
  if (d < 1) throw std::invalid_argument("dilation rate must be >= 1");
  return {Direction{-d, -d}, Direction{-d, 0}, Direction{-d, d},
          Direction{0, -d}};
}

DilationSet::DilationSet(std::vector<int> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw std::invalid_argument("dilation set is empty");
  for (std::size_t i = 0; i < rates_.size(); ++i) {
    if (rates_[i] < 1)
      throw std::invalid_argument("dilation rates must be positive");
    if (i > 0 && rates_[i] <= rates_[i - 1])
      throw std::invalid_argument("dilation rates must be strictly increasing");
  }
}

void DilationSet::validate_for(int height, int width) const {
  const int limit = std::min(height, width);
  for (int d : rates_)
    if (2 * d >= limit)
      throw std::invalid_argument("dilation rate " + std::to_string(d) +
                                  " is not below min(H,W)/2 for a " +
                                  std::to_string(height) + "x" +
                                  std::to_string(width) + " map");
}

Tensor cyclic_shift(const Tensor& map, Direction dir) {
  check_offsets(map.shape(), dir);
  Tensor out(map.shape());
  for (int n = 0; n < map.batch(); ++n)
    for (int c = 0; c < map.channels(); ++c)
      shift_plane(map.plane(n, c), out.plane(n, c), map.height(), map.width(),
                  dir);
  return out;
}

Tensor directional_contrast(const Tensor& map, Direction dir,
                            OpCounter* counter) {
  const Tensor fwd = cyclic_shift(map, dir);
  const Tensor bwd = cyclic_shift(map, -dir);
  Tensor out(map.shape());
  for (std::size_t i = 0; i < map.size(); ++i) {
    const double a = map[i] - fwd[i];
    const double b = map[i] - bwd[i];
    out[i] = a * b;
  }
  if (counter) counter->subtractions += 2 * map.size();
  return out;
}

Tensor dlc(const Tensor& map, int d, Reduction reduction, OpCounter* counter) {
  const auto dirs = canonical_directions(d);
  std::array<Tensor, 4> maps;
  for (std::size_t k = 0; k < dirs.size(); ++k)
    maps[k] = directional_contrast(map, dirs[k], counter);
  const std::array<const Tensor*, 4> stack{&maps[0], &maps[1], &maps[2],
                                           &maps[3]};
  return nn::reduce_stack_forward(stack, reduction);
}

Tensor mlc(const Tensor& map, const DilationSet& dilations,
           Reduction reduction) {
  std::vector<Tensor> scales;
  scales.reserve(dilations.size());
  for (int d : dilations.rates()) scales.push_back(dlc(map, d, reduction));
  std::vector<const Tensor*> stack;
  for (const auto& t : scales) stack.push_back(&t);
  return nn::reduce_stack_forward(stack, Reduction::Max);
}

Var cyclic_shift(Graph& g, Var map, Direction dir) {
  Tensor out = cyclic_shift(g.value(map), dir);
  return g.record(nn::OpKind::CyclicShift, {map}, std::move(out),
                  [dir](const nn::BackwardContext& ctx) {
                    *ctx.input_grad(0) += cyclic_shift(ctx.out_grad(), -dir);
                  });
}

Var directional_contrast(Graph& g, Var map, Direction dir) {
  Var fwd = cyclic_shift(g, map, dir);
  Var bwd = cyclic_shift(g, map, -dir);
  return nn::mul(g, nn::sub(g, map, fwd), nn::sub(g, map, bwd));
}

Var dlc(Graph& g, Var map, int d, Reduction reduction) {
  const Tensor& f = g.value(map);
  const auto dirs = canonical_directions(d);
  check_offsets(f.shape(), dirs[0]);
  std::array<Tensor, 4> maps;
  for (std::size_t k = 0; k < dirs.size(); ++k)
    maps[k] = directional_contrast(f, dirs[k]);
  const std::array<const Tensor*, 4> stack{&maps[0], &maps[1], &maps[2],
                                           &maps[3]};
  std::vector<std::uint8_t> arg;
  Tensor out = nn::reduce_stack_forward(stack, reduction, &arg);

  // dD_v/dF applied to G: (I - S_{-v})(G ⊗ b_v) + (I - S_v)(G ⊗ a_v), with
  // a_v = F - S_v F, b_v = F - S_{-v} F and G the gradient restricted to the
  // positions where v was selected.
  return g.record(
      nn::OpKind::DilatedContrast, {map}, std::move(out),
      [dirs, arg = std::move(arg)](const nn::BackwardContext& ctx) {
        const Tensor& f = ctx.input(0);
        const Tensor& gy = ctx.out_grad();
        Tensor& gx = *ctx.input_grad(0);
        for (std::size_t k = 0; k < dirs.size(); ++k) {
          const Direction v = dirs[k];
          const Tensor fwd = cyclic_shift(f, v);
          const Tensor bwd = cyclic_shift(f, -v);
          Tensor gb(f.shape());  // G ⊗ b_v
          Tensor ga(f.shape());  // G ⊗ a_v
          bool any = false;
          for (std::size_t i = 0; i < f.size(); ++i) {
            if (arg[i] != k) continue;
            any = true;
            gb[i] = gy[i] * (f[i] - bwd[i]);
            ga[i] = gy[i] * (f[i] - fwd[i]);
          }
          if (!any) continue;
          const Tensor gb_back = cyclic_shift(gb, -v);
          const Tensor ga_back = cyclic_shift(ga, v);
          for (std::size_t i = 0; i < f.size(); ++i)
            gx[i] += gb[i] + ga[i] - gb_back[i] - ga_back[i];
        }
      });
}

Var mlc(Graph& g, Var map, const DilationSet& dilations, Reduction reduction) {
  const Tensor& f = g.value(map);
  dilations.validate_for(f.height(), f.width());
  std::vector<Var> scales;
  scales.reserve(dilations.size());
  for (int d : dilations.rates()) scales.push_back(dlc(g, map, d, reduction));
  if (scales.size() == 1) return scales.front();
  return nn::reduce_over_stack(g, scales, Reduction::Max);
}

// ---------------------------------------------------------------------------
// MPCM
// ---------------------------------------------------------------------------

const char* to_string(MpcmImpl impl) {
  return impl == MpcmImpl::Kernel ? "kernel" : "cyclic";
}

void MpcmConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("mpcm: no scales");
  for (int n : scales)
    if (n < 1 || n % 2 == 0)
      throw std::invalid_argument("mpcm: scales must be odd and >= 1, got " +
                                  std::to_string(n));
}

int MpcmConfig::max_scale() const {
  return *std::max_element(scales.begin(), scales.end());
}

GrayImage box_mean(const GrayImage& image, int n) {
  if (n == 1) return image;
  const int h = image.height(), w = image.width(), r = n / 2;
  GrayImage rows(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += image.at(i, std::clamp(j + k, 0, w - 1));
      rows.at(i, j) = s;
    }
  GrayImage out(h, w);
  const double inv = 1.0 / (static_cast<double>(n) * n);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int k = -r; k <= r; ++k) s += rows.at(std::clamp(i + k, 0, h - 1), j);
      out.at(i, j) = s * inv;
    }
  return out;
}

namespace {

// Contrast of one scale by dense filtering: each of the eight difference
// kernels is a (3N)×(3N) stencil with +1 at the centre and -1 at the
// neighbour, evaluated tap by tap over a replicate-padded mean image.
GrayImage scale_contrast_kernel(const GrayImage& mean, int n) {
  const int h = mean.height(), w = mean.width();
  const int ks = 3 * n, r = ks / 2;
  const int pw = w + 2 * r;
  std::vector<double> padded(static_cast<std::size_t>(h + 2 * r) * pw);
  for (int i = 0; i < h + 2 * r; ++i)
    for (int j = 0; j < pw; ++j)
      padded[static_cast<std::size_t>(i) * pw + j] =
          mean.at(std::clamp(i - r, 0, h - 1), std::clamp(j - r, 0, w - 1));

  auto filter = [&](Direction v) {
    std::vector<double> kernel(static_cast<std::size_t>(ks) * ks, 0.0);
    kernel[static_cast<std::size_t>(r) * ks + r] = 1.0;
    kernel[static_cast<std::size_t>(r - v.x) * ks + (r - v.y)] = -1.0;
    GrayImage out(h, w);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double acc = 0.0;
        for (int u = 0; u < ks; ++u) {
          const double* prow = padded.data() + static_cast<std::size_t>(i + u) * pw + j;
          const double* krow = kernel.data() + static_cast<std::size_t>(u) * ks;
          for (int t = 0; t < ks; ++t) acc += krow[t] * prow[t];
        }
        out.at(i, j) = acc;
      }
    return out;
  };

  GrayImage result(h, w);
  const auto dirs = canonical_directions(n);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const GrayImage fwd = filter(dirs[k]);
    const GrayImage bwd = filter(-dirs[k]);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double p = fwd.at(i, j) * bwd.at(i, j);
        if (k == 0 || p < result.at(i, j)) result.at(i, j) = p;
      }
  }
  return result;
}

GrayImage scale_contrast_cyclic(const GrayImage& mean, int n,
                                OpCounter* counter) {
  const Tensor t = mean.to_tensor();
  const Tensor c = dlc(t, n, Reduction::Min, counter);
  return GrayImage(mean.height(), mean.width(),
                   std::vector<double>(c.values().begin(), c.values().end()));
}

}  // namespace

MpcmResult mpcm_detect(const GrayImage& image, const MpcmConfig& config,
                       OpCounter* counter) {
  config.validate();
  const int nmax = config.max_scale();
  if (image.height() < 3 * nmax || image.width() < 3 * nmax)
    throw std::invalid_argument("mpcm: image " + std::to_string(image.height()) +
                                "x" + std::to_string(image.width()) +
                                " is smaller than the " + std::to_string(3 * nmax) +
                                "-pixel window of the largest scale");
  const int h = image.height(), w = image.width();
  GrayImage saliency(h, w);
  bool first = true;
  for (int n : config.scales) {
    const GrayImage mean = box_mean(image, n);
    const GrayImage c = config.impl == MpcmImpl::Kernel
                            ? scale_contrast_kernel(mean, n)
                            : scale_contrast_cyclic(mean, n, counter);
    for (std::size_t i = 0; i < saliency.size(); ++i)
      if (first || c.pixels()[i] > saliency.pixels()[i])
        saliency.pixels()[i] = c.pixels()[i];
    first = false;
  }

  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (int i = nmax; i < h - nmax; ++i)
    for (int j = nmax; j < w - nmax; ++j) {
      sum += saliency.at(i, j);
      ++count;
    }
  const double mu = sum / static_cast<double>(count);
  for (int i = nmax; i < h - nmax; ++i)
    for (int j = nmax; j < w - nmax; ++j)
      sq += (saliency.at(i, j) - mu) * (saliency.at(i, j) - mu);
  const double sigma = std::sqrt(sq / static_cast<double>(count));
  const double threshold = mu + config.threshold_k * sigma;

  BinaryMask mask(h, w);
  for (std::size_t i = 0; i < saliency.size(); ++i)
    mask.bits()[i] = saliency.pixels()[i] > threshold ? 1 : 0;
  return {std::move(saliency), std::move(mask), nmax};
}

bool interior_equal(const BinaryMask& a, const BinaryMask& b, int margin) {
  if (a.height() != b.height() || a.width() != b.width()) return false;
  for (int i = margin; i < a.height() - margin; ++i)
    for (int j = margin; j < a.width() - margin; ++j)
      if (a.at(i, j) != b.at(i, j)) return false;
  return true;
}

bool interior_equal(const GrayImage& a, const GrayImage& b, int margin) {
  if (a.height() != b.height() || a.width() != b.width()) return false;
  for (int i = margin; i < a.height() - margin; ++i)
    for (int j = margin; j < a.width() - margin; ++j)
      if (a.at(i, j) != b.at(i, j)) return false;
  return true;
}

namespace {

GrayImage bench_frame(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pix(0.0, 255.0);
  GrayImage img(h, w);
  for (double& p : img.pixels()) p = pix(rng);
  return img;
}

}  // namespace

BenchReport mpcm_bench(const BenchOptions& options) {
  using clock = std::chrono::steady_clock;
  BenchReport report;
  std::mt19937_64 rng(options.seed);
  for (auto [h, w] : options.sizes) {
    std::vector<GrayImage> frames;
    for (int f = 0; f < std::max(1, options.frames); ++f)
      frames.push_back(bench_frame(h, w, rng));

    MpcmConfig kcfg = options.config, ccfg = options.config;
    kcfg.impl = MpcmImpl::Kernel;
    ccfg.impl = MpcmImpl::Cyclic;
    for (const auto& frame : frames) {
      const auto a = mpcm_detect(frame, kcfg);
      const auto b = mpcm_detect(frame, ccfg);
      if (!interior_equal(a.mask, b.mask, a.margin))
        throw std::runtime_error(
            "mpcm_bench: kernel and cyclic implementations disagree on the "
            "interior of a " +
            std::to_string(h) + "x" + std::to_string(w) + " frame");
    }

    std::vector<BenchRow> rows;
    for (MpcmImpl impl : options.impls) {
      MpcmConfig cfg = options.config;
      cfg.impl = impl;
      for (int i = 0; i < options.warmup; ++i) mpcm_detect(frames.front(), cfg);
      std::vector<double> ms;
      for (const auto& frame : frames) {
        const auto t0 = clock::now();
        const auto r = mpcm_detect(frame, cfg);
        const auto t1 = clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      double mean = 0.0;
      for (double v : ms) mean += v;
      mean /= static_cast<double>(ms.size());
      double var = 0.0;
      for (double v : ms) var += (v - mean) * (v - mean);
      const double sd =
          ms.size() > 1 ? std::sqrt(var / static_cast<double>(ms.size() - 1)) : 0.0;
      rows.push_back({impl, h, w, mean, sd, 1.0});
    }
    double kernel_ms = 0.0;
    for (const auto& r : rows)
      if (r.impl == MpcmImpl::Kernel) kernel_ms = r.mean_ms;
    for (auto& r : rows)
      r.speedup = kernel_ms > 0.0 ? kernel_ms / r.mean_ms
                                  : std::numeric_limits<double>::quiet_NaN();
    report.insert(report.end(), rows.begin(), rows.end());
  }
  return report;
}

void write_bench_csv(std::ostream& os, const BenchReport& report) {
  os << "impl,H,W,mean_ms,std_ms,speedup\n";
  for (const auto& r : report)
    os << to_string(r.impl) << ',' << r.height << ',' << r.width << ','
       << r.mean_ms << ',' << r.std_ms << ',' << r.speedup << '\n';
}

}  // namespace alcnet::contrast
