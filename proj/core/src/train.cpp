#include "alcnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "alcnet/log.hpp"
#include "alcnet/ops.hpp"
#include "alcnet/parallel.hpp"

namespace alcnet::objective {

namespace {

struct Snapshot {
  std::vector<Tensor> params;
  std::vector<nn::BatchNormState> buffers;

  void take(nn::StateRefs& refs) {
    params.clear();
    buffers.clear();
    for (auto* p : refs.params) params.push_back(p->value());
    for (auto& [name, st] : refs.buffers) buffers.push_back(*st);
  }
  void restore(nn::StateRefs& refs) const {
    for (std::size_t i = 0; i < params.size(); ++i) refs.params[i]->value() = params[i];
    for (std::size_t i = 0; i < buffers.size(); ++i) *refs.buffers[i].second = buffers[i];
  }
};

Tensor stack_masks(std::span<const BinaryMask* const> masks) {
  const int h = masks[0]->height(), w = masks[0]->width();
  Tensor t(Shape{static_cast<int>(masks.size()), 1, h, w});
  for (std::size_t n = 0; n < masks.size(); ++n) {
    if (masks[n]->height() != h || masks[n]->width() != w)
      throw std::invalid_argument("batch masks differ in size");
    auto bits = masks[n]->bits();
    double* dst = t.plane(static_cast<int>(n), 0);
    for (std::size_t i = 0; i < bits.size(); ++i) dst[i] = bits[i];
  }
  return t;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int round_up4(int v) { return (v + 3) / 4 * 4; }

}  // namespace

GrayImage predict(net::Network& model, const GrayImage& image) {
  const int h = image.height(), w = image.width();
  const int ph = std::max(4, round_up4(h)), pw = std::max(4, round_up4(w));
  Tensor x(Shape{1, 1, ph, pw});
  for (int i = 0; i < ph; ++i)
    for (int j = 0; j < pw; ++j)
      x.at(0, 0, i, j) = image.at(std::min(i, h - 1), std::min(j, w - 1));
  Graph g(false);
  const Var out = model.forward(g, g.input(std::move(x)), nn::Mode::Eval);
  const Tensor& s = g.value(out);
  GrayImage prob(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) prob.at(i, j) = sigmoid(s.at(0, 0, i, j));
  return prob;
}

std::vector<GrayImage> predict(net::Network& model,
                               std::span<const data::Sample> samples, int threads) {
  std::vector<GrayImage> out(samples.size());
  parallel_for(
      samples.size(), [&](std::size_t i) { out[i] = predict(model, samples[i].image); },
      threads);
  return out;
}

Evaluation evaluate(net::Network& model, std::span<const data::Sample> samples,
                    double threshold, bool with_roc, int threads) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  Evaluation ev;
  ev.probabilities = predict(model, samples, threads);
  std::vector<std::string> ids;
  std::vector<BinaryMask> gts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ids.push_back(samples[i].id);
    gts.push_back(samples[i].mask);
    ev.predictions.push_back(eval::binarize(ev.probabilities[i], threshold));
  }
  ev.report = eval::make_report(
      ids, ev.predictions, gts,
      with_roc ? std::span<const GrayImage>(ev.probabilities) : std::span<const GrayImage>{});
  return ev;
}

TrainResult train(net::Network& model, std::span<const data::Sample> train_set,
                  std::span<const data::Sample> val_set, const TrainOptions& opts) {
  const TrainConfig& cfg = opts.config;
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (opts.augment) opts.augment->validate();

  nn::StateRefs refs = model.state();
  AdaGrad opt(refs.params, cfg.lr, cfg.weight_decay);
  opt.zero_grad();
  std::mt19937_64 rng(cfg.seed);

  std::ofstream log_out;
  if (!opts.log_csv.empty()) {
    log_out.open(opts.log_csv);
    if (!log_out) throw std::runtime_error("cannot write " + opts.log_csv.string());
    log_out << "epoch,mean_loss,val_iou,val_niou\n" << std::setprecision(10);
  }

  TrainResult result;
  Snapshot best;
  best.take(refs);
  double best_score = -std::numeric_limits<double>::infinity();
  bool saved = false;

  auto save_best = [&] {
    if (opts.checkpoint.empty()) return;
    Snapshot current;
    current.take(refs);
    best.restore(refs);
    net::save_checkpoint(opts.checkpoint, model);
    current.restore(refs);
    saved = true;
  };

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    try {
      for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
        const std::size_t e = std::min(order.size(), b + cfg.batch_size);
        std::vector<data::Sample> batch;
        for (std::size_t k = b; k < e; ++k) {
          const auto& s = train_set[order[k]];
          batch.push_back(opts.augment ? data::augment(s, *opts.augment, rng) : s);
        }
        std::vector<const GrayImage*> imgs;
        std::vector<const BinaryMask*> masks;
        for (const auto& s : batch) {
          imgs.push_back(&s.image);
          masks.push_back(&s.mask);
        }
        Graph g;
        const Var x = g.input(stack_images(imgs));
        const Var scores = model.forward(g, x, nn::Mode::Train);
        if (!g.value(scores).all_finite())
          throw std::runtime_error("non-finite network output at epoch " +
                                   std::to_string(epoch));
        const Var probs = nn::sigmoid(g, scores);
        const Var loss = soft_iou_loss(g, probs, stack_masks(masks));
        const double lv = g.value(loss)[0];
        if (!std::isfinite(lv))
          throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
        g.backward(loss);
        opt.step();
        opt.zero_grad();
        loss_sum += lv;
      }
    } catch (const std::runtime_error& err) {
      result.diverged = true;
      result.failure = err.what();
      log::error(std::string("training diverged: ") + err.what());
      break;
    }

    EpochLog row;
    row.epoch = epoch;
    row.mean_loss = loss_sum / static_cast<double>(train_set.size());
    double score;
    if (!val_set.empty()) {
      const auto ev = evaluate(model, val_set, opts.threshold);
      row.val_iou = ev.report.iou;
      row.val_niou = ev.report.niou;
      score = row.val_iou;
    } else {
      row.val_iou = row.val_niou = std::numeric_limits<double>::quiet_NaN();
      score = -row.mean_loss;
    }
    result.log.push_back(row);
    if (log_out) log_out << row.epoch << ',' << row.mean_loss << ',' << row.val_iou
                         << ',' << row.val_niou << std::endl;
    if (opts.on_epoch) opts.on_epoch(row);

    if (score > best_score) {
      best_score = score;
      best.take(refs);
      result.best_epoch = epoch;
      result.best_val_iou = row.val_iou;
      save_best();
    } else if (opts.patience > 0 && epoch - result.best_epoch >= opts.patience) {
      log::info("early stop at epoch " + std::to_string(epoch));
      break;
    }
  }

  if (result.diverged || opts.restore_best) best.restore(refs);
  if (!saved && !opts.checkpoint.empty()) net::save_checkpoint(opts.checkpoint, model);
  return result;
}

}  // namespace alcnet::objective
