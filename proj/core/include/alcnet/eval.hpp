#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "alcnet/image.hpp"

namespace alcnet::eval {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// tp / (tp + fp + fn); an empty union counts as perfect agreement.
  double iou() const;
  Counts& operator+=(const Counts& o);
};

/// Throws std::invalid_argument on shape mismatch or non-binary masks.
Counts count(const BinaryMask& pred, const BinaryMask& gt);

double iou(const BinaryMask& pred, const BinaryMask& gt);

/// Mean of per-image IoUs. Throws on an empty list or unequal list lengths.
double niou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts);

/// Foreground where prob > threshold.
BinaryMask binarize(const GrayImage& prob, double threshold = 0.5);

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// 101 evenly spaced values in [0, 1].
std::vector<double> default_thresholds();

/// Pixel-level rates pooled over all images; a pixel counts as detected when
/// score >= threshold. A rate whose denominator is zero is reported as 0.
std::vector<RocPoint> roc(std::span<const GrayImage> scores,
                          std::span<const BinaryMask> gts,
                          std::span<const double> thresholds);
std::vector<RocPoint> roc(std::span<const GrayImage> scores,
                          std::span<const BinaryMask> gts);

struct Component {
  std::vector<std::size_t> pixels;  // row-major indices
};

/// 8-connected foreground components in raster order of their first pixel.
std::vector<Component> connected_components(const BinaryMask& mask);

struct Diagnosis {
  std::size_t boundary_error_px = 0;
  std::size_t missed_targets = 0;
  std::size_t split_detections = 0;

  Diagnosis& operator+=(const Diagnosis& o);
  friend bool operator==(const Diagnosis&, const Diagnosis&) = default;
};

/// Ground-truth components without an overlapping prediction are misses;
/// those overlapped by two or more predicted components are splits. For the
/// rest, pixels in the symmetric difference between the gt component and its
/// overlapping predicted components count as boundary error.
Diagnosis diagnose(const BinaryMask& pred, const BinaryMask& gt);

struct ImageRecord {
  std::string id;
  Counts counts;
  double iou = 0.0;
  Diagnosis diagnosis;
};

struct MetricReport {
  std::vector<ImageRecord> records;
  double iou = 0.0;
  double niou = 0.0;
  Diagnosis diagnosis;
  std::vector<RocPoint> roc;
};

/// scores may be empty, in which case no ROC is computed.
MetricReport make_report(std::span<const std::string> ids,
                         std::span<const BinaryMask> preds,
                         std::span<const BinaryMask> gts,
                         std::span<const GrayImage> scores = {});

/// Per-image rows followed by a pooled "ALL" row.
void write_metrics_csv(std::ostream& os, const MetricReport& r);
/// One JSON object per image, then a summary object.
void write_metrics_jsonl(std::ostream& os, const MetricReport& r);
void write_roc_csv(std::ostream& os, std::span<const RocPoint> roc);

}  // namespace alcnet::eval
