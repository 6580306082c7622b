#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/feature_map.hpp"
#include "texrand/image.hpp"
#include "texrand/trainer/config.hpp"
#include "texrand/trainer/seg_model.hpp"

namespace texrand::trainer {

struct LossGrad {
  double loss = 0.0;
  FeatureMap grad;  // d(loss)/d(logits)
};

// Per-pixel softmax over the channel axis, log-sum-exp stabilised.
inline FeatureMap softmax(const FeatureMap& logits) {
  FeatureMap out = logits;
  const int c = logits.channels;
  for (std::size_t p = 0; p < logits.pixels(); ++p) {
    double* row = out.data.data() + p * c;
    const double mx = *std::max_element(row, row + c);
    double sum = 0.0;
    for (int k = 0; k < c; ++k) sum += (row[k] = std::exp(row[k] - mx));
    for (int k = 0; k < c; ++k) row[k] /= sum;
  }
  return out;
}

// Mean over pixels of w[y] * -log softmax(logits)[y].
// Gradient: w[y] * (softmax - onehot(y)) / pixels.
inline LossGrad weighted_ce(const FeatureMap& logits, const LabelMap& label, std::span<const double> class_weights) {
  detail::require(label.height == logits.height && label.width == logits.width, ErrorKind::invalid_shape,
                  "weighted_ce: label size differs from logits");
  const int c = logits.channels;
  detail::require(class_weights.empty() || class_weights.size() == static_cast<std::size_t>(c),
                  ErrorKind::invalid_parameter, "weighted_ce: need one class weight per channel");
  const double n = static_cast<double>(logits.pixels());
  LossGrad out{0.0, softmax(logits)};
  for (std::size_t p = 0; p < logits.pixels(); ++p) {
    const int y = label.labels[p];
    detail::require(y < c, ErrorKind::invalid_parameter, "weighted_ce: label exceeds class count");
    const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
    const double* z = logits.data.data() + p * c;
    const double mx = *std::max_element(z, z + c);
    double sum = 0.0;
    for (int k = 0; k < c; ++k) sum += std::exp(z[k] - mx);
    out.loss += w * (std::log(sum) + mx - z[y]);
    double* g = out.grad.data.data() + p * c;
    g[y] -= 1.0;
    for (int k = 0; k < c; ++k) g[k] *= w / n;
  }
  out.loss /= n;
  return out;
}

struct PairLossGrad {
  double loss = 0.0;
  FeatureMap grad_a;
  FeatureMap grad_b;
};

// Mean absolute difference; the subgradient at ties is zero.
inline PairLossGrad cgl_loss(const FeatureMap& a, const FeatureMap& b) {
  require_same_shape(a, b, "cgl_loss");
  const double n = static_cast<double>(a.size());
  PairLossGrad out{0.0, FeatureMap(a.height, a.width, a.channels), FeatureMap(a.height, a.width, a.channels)};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    out.loss += std::fabs(d);
    const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    out.grad_a.data[i] = s / n;
    out.grad_b.data[i] = -s / n;
  }
  out.loss /= n;
  return out;
}

// The three input streams of one training sample. Absent streams are skipped.
struct Streams {
  Image raw;
  std::optional<Image> gtr;
  std::optional<Image> ltr;
};

struct TotalLoss {
  double loss = 0.0;
  double l_seg = 0.0;
  double l_con = 0.0;
  ModelGrad grad;
};

// L = (1 - beta) * L_seg + beta * L_con when the consistency term is active
// (cfg.cgl with both GTR and LTR streams present), otherwise L = L_seg.
// L_seg sums weighted cross-entropy over the present streams; L_con is the L1
// distance between the GTR and LTR logits, differentiated through both.
inline TotalLoss total_loss(const SegModel& model, const Streams& streams, const LabelMap& label,
                            const TrainConfig& cfg) {
  std::vector<double> weights(static_cast<std::size_t>(model.num_classes()));
  for (int c = 0; c < model.num_classes(); ++c) weights[c] = cfg.class_weight(c);
  const bool consistency = cfg.cgl && streams.gtr && streams.ltr;
  const double seg_scale = consistency ? 1.0 - cfg.beta : 1.0;

  TotalLoss out{0.0, 0.0, 0.0, ModelGrad(model)};
  std::optional<ForwardCache> gtr_cache, ltr_cache;
  std::optional<FeatureMap> gtr_dlogits, ltr_dlogits;

  auto seg_stream = [&](const Image& img, std::optional<ForwardCache>* keep, std::optional<FeatureMap>* keep_grad) {
    ForwardCache cache = forward_cached(model, img);
    LossGrad ce = weighted_ce(cache.logits, label, weights);
    out.l_seg += ce.loss;
    for (double& g : ce.grad.data) g *= seg_scale;
    if (keep) {
      *keep = std::move(cache);
      *keep_grad = std::move(ce.grad);
    } else {
      backward(model, cache, ce.grad, out.grad);
    }
  };

  seg_stream(streams.raw, nullptr, nullptr);
  if (streams.gtr) seg_stream(*streams.gtr, &gtr_cache, &gtr_dlogits);
  if (streams.ltr) seg_stream(*streams.ltr, &ltr_cache, &ltr_dlogits);

  if (consistency) {
    PairLossGrad con = cgl_loss(gtr_cache->logits, ltr_cache->logits);
    out.l_con = con.loss;
    for (std::size_t i = 0; i < con.grad_a.size(); ++i) {
      gtr_dlogits->data[i] += cfg.beta * con.grad_a.data[i];
      ltr_dlogits->data[i] += cfg.beta * con.grad_b.data[i];
    }
  }
  if (gtr_cache) backward(model, *gtr_cache, *gtr_dlogits, out.grad);
  if (ltr_cache) backward(model, *ltr_cache, *ltr_dlogits, out.grad);

  out.loss = seg_scale * out.l_seg + (consistency ? cfg.beta * out.l_con : 0.0);
  return out;
}

}  // namespace texrand::trainer
