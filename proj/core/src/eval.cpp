#include "alcnet/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace alcnet::eval {

double Counts::iou() const {
  const std::size_t uni = tp + fp + fn;
  return uni == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(uni);
}

Counts& Counts::operator+=(const Counts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

namespace {

void check_pair(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width())
    throw std::invalid_argument("mask shapes differ");
  if (!pred.is_binary() || !gt.is_binary())
    throw std::invalid_argument("masks must be binary");
}

}  // namespace

Counts count(const BinaryMask& pred, const BinaryMask& gt) {
  check_pair(pred, gt);
  Counts c;
  auto p = pred.bits();
  auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] && g[i]) ++c.tp;
    else if (p[i]) ++c.fp;
    else if (g[i]) ++c.fn;
  }
  return c;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return count(pred, gt).iou(); }

double niou(std::span<const BinaryMask> preds, std::span<const BinaryMask> gts) {
  if (preds.empty()) throw std::invalid_argument("niou: empty list");
  if (preds.size() != gts.size()) throw std::invalid_argument("niou: list lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += iou(preds[i], gts[i]);
  return sum / static_cast<double>(preds.size());
}

BinaryMask binarize(const GrayImage& prob, double threshold) {
  BinaryMask m(prob.height(), prob.width());
  auto px = prob.pixels();
  auto bits = m.bits();
  for (std::size_t i = 0; i < px.size(); ++i) bits[i] = px[i] > threshold ? 1 : 0;
  return m;
}

std::vector<double> default_thresholds() {
  std::vector<double> t(101);
  for (int i = 0; i <= 100; ++i) t[i] = i / 100.0;
  return t;
}

std::vector<RocPoint> roc(std::span<const GrayImage> scores,
                          std::span<const BinaryMask> gts,
                          std::span<const double> thresholds) {
  if (scores.size() != gts.size()) throw std::invalid_argument("roc: list lengths differ");
  std::vector<std::size_t> tp(thresholds.size()), fp(thresholds.size());
  std::size_t pos = 0, neg = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const auto& s = scores[k];
    const auto& g = gts[k];
    if (s.height() != g.height() || s.width() != g.width())
      throw std::invalid_argument("roc: score and mask shapes differ");
    auto px = s.pixels();
    auto bits = g.bits();
    for (std::size_t i = 0; i < px.size(); ++i) {
      (bits[i] ? pos : neg) += 1;
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        if (px[i] >= thresholds[t]) (bits[i] ? tp[t] : fp[t]) += 1;
      }
    }
  }
  std::vector<RocPoint> out(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    out[t].threshold = thresholds[t];
    out[t].tpr = pos ? static_cast<double>(tp[t]) / pos : 0.0;
    out[t].fpr = neg ? static_cast<double>(fp[t]) / neg : 0.0;
  }
  return out;
}

std::vector<RocPoint> roc(std::span<const GrayImage> scores,
                          std::span<const BinaryMask> gts) {
  const auto t = default_thresholds();
  return roc(scores, gts, t);
}

std::vector<Component> connected_components(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> comps;
  std::vector<std::size_t> stack;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const std::size_t start = static_cast<std::size_t>(i) * w + j;
      if (!mask.at(i, j) || label[start] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      comps.emplace_back();
      label[start] = id;
      stack.push_back(start);
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        comps.back().pixels.push_back(p);
        const int pi = static_cast<int>(p / w), pj = static_cast<int>(p % w);
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            const int ni = pi + di, nj = pj + dj;
            if (ni < 0 || nj < 0 || ni >= h || nj >= w) continue;
            const std::size_t q = static_cast<std::size_t>(ni) * w + nj;
            if (mask.at(ni, nj) && label[q] < 0) {
              label[q] = id;
              stack.push_back(q);
            }
          }
      }
      std::sort(comps.back().pixels.begin(), comps.back().pixels.end());
    }
  return comps;
}

Diagnosis& Diagnosis::operator+=(const Diagnosis& o) {
  boundary_error_px += o.boundary_error_px;
  missed_targets += o.missed_targets;
  split_detections += o.split_detections;
  return *this;
}

Diagnosis diagnose(const BinaryMask& pred, const BinaryMask& gt) {
  check_pair(pred, gt);
  const auto pcomps = connected_components(pred);
  std::vector<int> plabel(pred.size(), -1);
  for (std::size_t c = 0; c < pcomps.size(); ++c)
    for (auto p : pcomps[c].pixels) plabel[p] = static_cast<int>(c);

  Diagnosis d;
  for (const auto& g : connected_components(gt)) {
    std::set<int> hits;
    for (auto p : g.pixels)
      if (plabel[p] >= 0) hits.insert(plabel[p]);
    if (hits.empty()) {
      ++d.missed_targets;
      continue;
    }
    if (hits.size() >= 2) ++d.split_detections;
    std::size_t overlap = 0, pred_px = 0;
    for (auto p : g.pixels) overlap += plabel[p] >= 0 ? 1 : 0;
    for (int c : hits) pred_px += pcomps[c].pixels.size();
    d.boundary_error_px += (g.pixels.size() - overlap) + (pred_px - overlap);
  }
  return d;
}

MetricReport make_report(std::span<const std::string> ids,
                         std::span<const BinaryMask> preds,
                         std::span<const BinaryMask> gts,
                         std::span<const GrayImage> scores) {
  if (preds.empty()) throw std::invalid_argument("metric report: no images");
  if (ids.size() != preds.size() || gts.size() != preds.size())
    throw std::invalid_argument("metric report: list lengths differ");
  MetricReport r;
  Counts pooled;
  double iou_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ImageRecord rec;
    rec.id = ids[i];
    rec.counts = count(preds[i], gts[i]);
    rec.iou = rec.counts.iou();
    rec.diagnosis = diagnose(preds[i], gts[i]);
    pooled += rec.counts;
    iou_sum += rec.iou;
    r.diagnosis += rec.diagnosis;
    r.records.push_back(std::move(rec));
  }
  r.iou = pooled.iou();
  r.niou = iou_sum / static_cast<double>(preds.size());
  if (!scores.empty()) r.roc = roc(scores, gts);
  return r;
}

void write_metrics_csv(std::ostream& os, const MetricReport& r) {
  os << "id,tp,fp,fn,iou,boundary_error_px,missed_targets,split_detections\n";
  os << std::setprecision(10);
  Counts pooled;
  for (const auto& rec : r.records) {
    pooled += rec.counts;
    os << rec.id << ',' << rec.counts.tp << ',' << rec.counts.fp << ','
       << rec.counts.fn << ',' << rec.iou << ',' << rec.diagnosis.boundary_error_px
       << ',' << rec.diagnosis.missed_targets << ','
       << rec.diagnosis.split_detections << '\n';
  }
  os << "ALL," << pooled.tp << ',' << pooled.fp << ',' << pooled.fn << ',' << r.iou
     << ',' << r.diagnosis.boundary_error_px << ',' << r.diagnosis.missed_targets
     << ',' << r.diagnosis.split_detections << '\n';
}

void write_metrics_jsonl(std::ostream& os, const MetricReport& r) {
  for (const auto& rec : r.records) {
    nlohmann::json j = {{"id", rec.id},
                        {"tp", rec.counts.tp},
                        {"fp", rec.counts.fp},
                        {"fn", rec.counts.fn},
                        {"iou", rec.iou},
                        {"boundary_error_px", rec.diagnosis.boundary_error_px},
                        {"missed_targets", rec.diagnosis.missed_targets},
                        {"split_detections", rec.diagnosis.split_detections}};
    os << j.dump() << '\n';
  }
  nlohmann::json summary = {{"summary", true},
                            {"images", r.records.size()},
                            {"iou", r.iou},
                            {"niou", r.niou},
                            {"roc_unit", "pixel"},
                            {"boundary_error_px", r.diagnosis.boundary_error_px},
                            {"missed_targets", r.diagnosis.missed_targets},
                            {"split_detections", r.diagnosis.split_detections}};
  os << summary.dump() << '\n';
}

void write_roc_csv(std::ostream& os, std::span<const RocPoint> roc) {
  os << "threshold,tpr_pixel,fpr_pixel\n" << std::setprecision(10);
  for (const auto& p : roc) os << p.threshold << ',' << p.tpr << ',' << p.fpr << '\n';
}

}  // namespace alcnet::eval
