#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/feature_map.hpp"
#include "texrand/image.hpp"
#include "texrand/nn.hpp"
#include "texrand/rng.hpp"
#include "texrand/tensor_file.hpp"

namespace texrand::trainer {

// Per-pixel class ids, row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return labels.size(); }
  bool operator==(const LabelMap&) const = default;
};

inline LabelMap flip_horizontal(const LabelMap& m) {
  LabelMap out(m.height, m.width);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) out.at(y, m.width - 1 - x) = m.at(y, x);
  return out;
}

// Stack of stride-1 convolutions with ReLU between layers and none after the
// last; the last layer's output is the pre-softmax logit map. Spatial size is
// preserved (padding = kernel / 2).
struct SegModel {
  std::vector<nn::Conv2d> layers;

  // 3x3 conv 3->16, ReLU, 3x3 conv 16->32, ReLU, 1x1 conv 32->classes.
  static SegModel standard(int num_classes) {
    detail::require(num_classes >= 2, ErrorKind::invalid_parameter, "SegModel: need at least two classes");
    SegModel m;
    m.layers = {nn::Conv2d(3, 3, 16), nn::Conv2d(3, 16, 32), nn::Conv2d(1, 32, num_classes)};
    return m;
  }

  // Arbitrary stack: kernels[i] is the kernel size of layer i, widths has one
  // more entry than kernels (input channels first, classes last).
  static SegModel custom(const std::vector<int>& kernels, const std::vector<int>& widths) {
    detail::require(!kernels.empty() && widths.size() == kernels.size() + 1, ErrorKind::invalid_parameter,
                    "SegModel::custom: widths must have one more entry than kernels");
    SegModel m;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      detail::require(kernels[i] % 2 == 1, ErrorKind::invalid_parameter, "SegModel: kernel sizes must be odd");
      m.layers.emplace_back(kernels[i], widths[i], widths[i + 1]);
    }
    return m;
  }

  void init(std::uint64_t seed) {
    RngStream rng(seed);
    for (auto& layer : layers) layer.init_he(rng);
  }

  int in_channels() const { return layers.front().in_channels; }
  int num_classes() const { return layers.back().out_channels; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.parameter_count();
    return n;
  }

  std::vector<Tensor> to_tensors() const {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < layers.size(); ++i) nn::append_tensors(layers[i], "seg." + std::to_string(i), out);
    return out;
  }

  // Architecture is recovered from tensor shapes.
  static SegModel from_tensors(const std::vector<Tensor>& tensors) {
    detail::require(!tensors.empty() && tensors.size() % 2 == 0, ErrorKind::format,
                    "model file: expected weight/bias tensor pairs");
    SegModel m;
    for (std::size_t i = 0; i < tensors.size() / 2; ++i) {
      const Tensor& w = find_tensor(tensors, "seg." + std::to_string(i) + ".weight");
      detail::require(w.dims.size() == 4 && w.dims[0] == w.dims[1], ErrorKind::format,
                      "model file: '" + w.name + "' must be k x k x in x out");
      nn::Conv2d layer(static_cast<int>(w.dims[0]), static_cast<int>(w.dims[2]), static_cast<int>(w.dims[3]));
      nn::load_tensors_into(layer, "seg." + std::to_string(i), tensors);
      if (!m.layers.empty()) {
        detail::require(m.layers.back().out_channels == layer.in_channels, ErrorKind::invalid_shape,
                        "model file: layer widths do not chain");
      }
      m.layers.push_back(std::move(layer));
    }
    return m;
  }

  void save(const std::filesystem::path& path) const { save_tensors(path, to_tensors()); }
  static SegModel load(const std::filesystem::path& path) { return from_tensors(load_tensors(path)); }
};

struct ModelGrad {
  std::vector<nn::Conv2dGrad> layers;

  explicit ModelGrad(const SegModel& model) {
    for (const auto& layer : model.layers) layers.emplace_back(layer);
  }

  void add_scaled(const ModelGrad& other, double scale) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weight.size(); ++i) layers[l].weight[i] += scale * other.layers[l].weight[i];
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i) layers[l].bias[i] += scale * other.layers[l].bias[i];
    }
  }
};

// Activations retained for backpropagation.
struct ForwardCache {
  std::vector<FeatureMap> inputs;  // input to each layer (post-ReLU for hidden layers)
  FeatureMap logits;
};

inline ForwardCache forward_cached(const SegModel& model, const Image& img) {
  detail::require(img.channels() == model.in_channels(), ErrorKind::invalid_shape,
                  "forward: image has " + std::to_string(img.channels()) + " channels, model expects " +
                      std::to_string(model.in_channels()));
  ForwardCache cache;
  cache.inputs.push_back(to_feature_map(img));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    FeatureMap x = nn::conv_forward(model.layers[i], cache.inputs.back());
    if (i + 1 == model.layers.size()) {
      cache.logits = std::move(x);
    } else {
      nn::relu_inplace(x);
      cache.inputs.push_back(std::move(x));
    }
  }
  return cache;
}

// Pre-softmax logits, H x W x classes.
inline FeatureMap forward(const SegModel& model, const Image& img) { return forward_cached(model, img).logits; }

// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
inline void backward(const SegModel& model, const ForwardCache& cache, const FeatureMap& dlogits, ModelGrad& grad) {
  require_same_shape(dlogits, cache.logits, "backward");
  FeatureMap d = dlogits;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const FeatureMap& input = cache.inputs[i];
    if (i == 0) {
      nn::conv_backward(model.layers[0], input, d, grad.layers[0], nullptr);
      break;
    }
    FeatureMap din(input.height, input.width, input.channels);
    nn::conv_backward(model.layers[i], input, d, grad.layers[i], &din);
    nn::relu_backward_inplace(input, din);
    d = std::move(din);
  }
}

inline LabelMap predict(const SegModel& model, const Image& img) {
  const FeatureMap logits = forward(model, img);
  LabelMap out(logits.height, logits.width);
  for (std::size_t p = 0; p < logits.pixels(); ++p) {
    const double* row = logits.data.data() + p * logits.channels;
    int best = 0;
    for (int c = 1; c < logits.channels; ++c)
      if (row[c] > row[best]) best = c;
    out.labels[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace texrand::trainer
