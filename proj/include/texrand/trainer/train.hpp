#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "texrand/error.hpp"
#include "texrand/gtr.hpp"
#include "texrand/image.hpp"
#include "texrand/ltr.hpp"
#include "texrand/rng.hpp"
#include "texrand/tcps.hpp"
#include "texrand/trainer/config.hpp"
#include "texrand/trainer/losses.hpp"
#include "texrand/trainer/metrics.hpp"
#include "texrand/trainer/seg_model.hpp"
#include "texrand/trainer/sgd.hpp"
#include "texrand/trainer/toy_dataset.hpp"

namespace texrand::trainer {

// Patch matrices are a few MB each and are reallocated every step. glibc hands
// blocks that size back to the kernel on free, so each step page-faults them
// in again; raising the thresholds keeps them on the heap (about 2.5x faster).
inline void keep_large_blocks_on_heap() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    return true;
  }();
  (void)done;
#endif
}

struct LogEntry {
  int iteration = 0;
  double lr = 0.0;
  double l_seg = 0.0;
  double l_con = 0.0;
};

inline std::string format_log_line(const LogEntry& e) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.9e,%.9e,%.9e", e.iteration, e.lr, e.l_seg, e.l_con);
  return buf;
}

inline void write_log_csv(const std::filesystem::path& path, const std::vector<LogEntry>& log) {
  std::ofstream out(path);
  detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << "iter,lr,l_seg,l_con\n";
  for (const auto& e : log) out << format_log_line(e) << '\n';
  detail::require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path.string() + "'");
}

struct TrainResult {
  SegModel model;
  std::vector<LogEntry> log;
};

// Applies the optional mirror and blur preprocessing to one sample.
inline void preprocess(Image& img, LabelMap& label, const TrainConfig& cfg, RngStream& rng) {
  if (cfg.mirror && rng.bernoulli(cfg.mirror_probability)) {
    img = flip_horizontal(img);
    label = flip_horizontal(label);
  }
  if (cfg.blur && rng.bernoulli(cfg.blur_probability)) {
    const double sigma = rng.uniform(0.0, cfg.blur_radius_max);
    if (sigma > 1e-3) {
      img = convolve(img, gaussian_kernel(sigma, std::max(1, static_cast<int>(std::ceil(3.0 * sigma)))));
      img.clamp_to_range();
    }
  }
}

// Single-threaded and bitwise deterministic for fixed cfg.seed.
//
// Seed layout: child_seed(cfg.seed, 0) initialises the model; child_seed(cfg.seed, 1)
// drives batch sampling, preprocessing, painting choice and masks, consumed in
// that order per sample.
//
// Per iteration, each sample contributes the raw stream, the GTR stream when
// cfg.gtr, and the LTR stream when cfg.ltr (built from the same stylised
// image); gradients are averaged over the batch.
inline TrainResult train(const TrainConfig& cfg, const std::vector<tcps::PaintingRecord>& pool,
                         const std::vector<ToySample>& data, const gtr::CodecWeights& codec = {},
                         const std::function<void(const LogEntry&)>& on_log = {}) {
  cfg.validate();
  detail::require(!data.empty(), ErrorKind::invalid_parameter, "train: empty training set");
  const bool stylize = cfg.gtr || cfg.ltr;
  detail::require(!stylize || !pool.empty(), ErrorKind::invalid_parameter,
                  "train: painting pool must be non-empty when GTR or LTR is enabled");

  keep_large_blocks_on_heap();
  TrainResult result;
  result.model = SegModel::standard(cfg.num_classes);
  result.model.init(child_seed(cfg.seed, 0));
  RngStream rng(child_seed(cfg.seed, 1));
  Sgd sgd(result.model);
  const double inv_batch = 1.0 / cfg.batch_size;

  for (int it = 0; it < cfg.iterations; ++it) {
    ModelGrad grad(result.model);
    double l_seg = 0.0, l_con = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const ToySample& sample = data[static_cast<std::size_t>(rng.below(data.size()))];
      Image x = sample.image;
      LabelMap y = sample.label;
      preprocess(x, y, cfg, rng);

      Streams streams{x, std::nullopt, std::nullopt};
      if (stylize) {
        const auto& painting = tcps::sample_painting(pool, rng);
        Image x_gtr = gtr::gtr_stylize(x, painting.image, codec);
        if (cfg.ltr) {
          const ltr::Mask m = ltr::generate_mask(x.height(), x.width(), cfg.ltr_cfg, rng);
          streams.ltr = ltr::mix(convert_range(x, Range::unit), x_gtr, m);
        }
        if (cfg.gtr) streams.gtr = std::move(x_gtr);
      }
      const TotalLoss tl = total_loss(result.model, streams, y, cfg);
      grad.add_scaled(tl.grad, inv_batch);
      l_seg += tl.l_seg * inv_batch;
      l_con += tl.l_con * inv_batch;
    }
    if (!std::isfinite(l_seg) || !std::isfinite(l_con)) {
      detail::fail(ErrorKind::numerical, "train: non-finite loss at iteration " + std::to_string(it) +
                                             " (l_seg=" + std::to_string(l_seg) + ", l_con=" + std::to_string(l_con) +
                                             ", lr=" + std::to_string(poly_lr(cfg.lr0, it, cfg.iterations, cfg.poly_power)) + ")");
    }
    const double lr = sgd.step(result.model, grad, it, cfg);
    if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      result.log.push_back({it, lr, l_seg, l_con});
      if (on_log) on_log(result.log.back());
    }
  }
  return result;
}

// Dataset-level mIoU: one confusion matrix accumulated over all samples.
inline IouResult evaluate(const SegModel& model, const std::vector<ToySample>& data) {
  ConfusionMatrix cm(model.num_classes());
  for (const auto& s : data) cm.add(predict(model, s.image), s.label);
  return cm.iou();
}

}  // namespace texrand::trainer
