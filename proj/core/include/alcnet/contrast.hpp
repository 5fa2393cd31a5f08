#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "alcnet/image.hpp"
#include "alcnet/ops.hpp"

namespace alcnet::contrast {

using nn::Graph;
using nn::Reduction;
using nn::Tensor;
using nn::Var;

/// Neighbour offset: `x` rows, `y` columns. A shift by (x, y) moves the pixel
/// at (i - x, j - y) to (i, j).
struct Direction {
  int x = 0;
  int y = 0;
  Direction operator-() const { return {-x, -y}; }
  friend bool operator==(Direction, Direction) = default;
};

/// The four canonical directions {(-d,-d), (-d,0), (-d,d), (0,-d)}; each pairs
/// with its negation to cover the eight neighbours at distance d.
std::array<Direction, 4> canonical_directions(int d);

/// Strictly increasing positive dilation rates.
class DilationSet {
 public:
  DilationSet() = default;
  explicit DilationSet(std::vector<int> rates);

  const std::vector<int>& rates() const { return rates_; }
  std::size_t size() const { return rates_.size(); }
  int max() const { return rates_.back(); }

  /// Throws unless every rate is below min(height, width) / 2.
  void validate_for(int height, int width) const;

  friend bool operator==(const DilationSet&, const DilationSet&) = default;

 private:
  std::vector<int> rates_;
};

/// Tallies arithmetic performed by the shift-based difference stage.
struct OpCounter {
  std::uint64_t subtractions = 0;
};

// ---------------------------------------------------------------------------
// Raw (tape-free) operators on N×C×H×W tensors. All are depth-wise.
// ---------------------------------------------------------------------------

/// out[n, c, i, j] = in[n, c, (i - x) mod H, (j - y) mod W].
Tensor cyclic_shift(const Tensor& map, Direction dir);

/// (F - S_v F) ⊗ (F - S_{-v} F). Performs 2·numel subtractions.
Tensor directional_contrast(const Tensor& map, Direction dir,
                            OpCounter* counter = nullptr);

/// Reduction of the four directional contrasts at dilation d.
Tensor dlc(const Tensor& map, int d, Reduction reduction = Reduction::Min,
           OpCounter* counter = nullptr);

/// Per-position maximum of dlc over the dilation set.
Tensor mlc(const Tensor& map, const DilationSet& dilations,
           Reduction reduction = Reduction::Min);

// ---------------------------------------------------------------------------
// Differentiable versions
// ---------------------------------------------------------------------------

/// Gradient is the inverse shift of the incoming gradient.
Var cyclic_shift(Graph& g, Var map, Direction dir);

/// Composed from cyclic_shift, sub and mul nodes.
Var directional_contrast(Graph& g, Var map, Direction dir);

/// Single fused node; numerically identical to reducing the four composed
/// directional_contrast nodes with reduce_over_stack.
Var dlc(Graph& g, Var map, int d, Reduction reduction = Reduction::Min);

Var mlc(Graph& g, Var map, const DilationSet& dilations,
        Reduction reduction = Reduction::Min);

// ---------------------------------------------------------------------------
// Classical multi-scale patch contrast detector
// ---------------------------------------------------------------------------

enum class MpcmImpl {
  /// Eight dense 3N×3N difference kernels per scale over the mean image.
  Kernel,
  /// Cyclic shifts of the mean image, 8HW subtractions per scale.
  Cyclic,
};

const char* to_string(MpcmImpl impl);

struct MpcmConfig {
  std::vector<int> scales{1, 3, 5, 7, 9};
  double threshold_k = 3.0;
  MpcmImpl impl = MpcmImpl::Cyclic;

  void validate() const;
  int max_scale() const;
};

struct MpcmResult {
  GrayImage saliency;
  BinaryMask mask;
  /// Width of the border band where the two implementations may differ;
  /// threshold statistics are taken inside it.
  int margin = 0;
};

/// N×N box mean with replicated borders.
GrayImage box_mean(const GrayImage& image, int n);

MpcmResult mpcm_detect(const GrayImage& image, const MpcmConfig& config,
                       OpCounter* counter = nullptr);

/// True when two masks agree at every position at least `margin` from each
/// border.
bool interior_equal(const BinaryMask& a, const BinaryMask& b, int margin);
bool interior_equal(const GrayImage& a, const GrayImage& b, int margin);

struct BenchRow {
  MpcmImpl impl;
  int height;
  int width;
  double mean_ms;
  double std_ms;
  /// kernel mean time / this impl's mean time.
  double speedup;
};

struct BenchOptions {
  std::vector<std::pair<int, int>> sizes{{256, 256}, {512, 512}};
  std::vector<MpcmImpl> impls{MpcmImpl::Kernel, MpcmImpl::Cyclic};
  int frames = 5;
  int warmup = 1;
  std::uint64_t seed = 1;
  MpcmConfig config{};
};

using BenchReport = std::vector<BenchRow>;

/// Times both implementations per frame size after confirming they produce
/// interior-identical masks on the benchmark frames; throws std::runtime_error
/// when they disagree.
BenchReport mpcm_bench(const BenchOptions& options);

/// CSV with header impl,H,W,mean_ms,std_ms,speedup.
void write_bench_csv(std::ostream& os, const BenchReport& report);

}  // namespace alcnet::contrast
