#pragma once

#include <cmath>
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

// Global texture randomisation: encode source and painting, transfer the
// painting's per-channel feature statistics onto the source features (AdaIN),
// decode back to an image.

namespace texrand::gtr {

enum class Backend { identity, conv };

inline const char* to_string(Backend b) { return b == Backend::identity ? "identity" : "conv"; }

inline Backend parse_backend(const std::string& s) {
  if (s == "identity") return Backend::identity;
  if (s == "conv") return Backend::conv;
  detail::fail(ErrorKind::invalid_parameter, "unknown GTR backend '" + s + "' (expected identity or conv)");
}

// Encoder/decoder parameters.
//
// identity: both networks are identity maps, so AdaIN acts on RGB pixels.
// conv:     encoder  3x3 conv 3->16 (s1), 16->32 (s2), 32->64 (s2), ReLU after each
//           decoder  up2, 3x3 conv 64->32, ReLU, up2, 3x3 conv 32->16, ReLU, 3x3 conv 16->3
// Features of an H x W input are (H/4) x (W/4) x 64.
struct CodecWeights {
  Backend backend = Backend::identity;
  std::vector<nn::Conv2d> encoder;
  std::vector<nn::Conv2d> decoder;

  static CodecWeights identity() { return {}; }

  // Conv architecture with all-zero parameters.
  static CodecWeights conv_architecture() {
    CodecWeights w;
    w.backend = Backend::conv;
    w.encoder = {nn::Conv2d(3, 3, 16, 1), nn::Conv2d(3, 16, 32, 2), nn::Conv2d(3, 32, 64, 2)};
    w.decoder = {nn::Conv2d(3, 64, 32, 1), nn::Conv2d(3, 32, 16, 1), nn::Conv2d(3, 16, 3, 1)};
    return w;
  }

  // He-initialised conv weights; a stand-in for a trained model in tests and demos.
  // Encoder taps are made non-negative: inputs are non-negative, so every
  // channel stays a positive mix of varying signals and never dies under ReLU
  // (a dead channel has zero variance and AdaIN rejects it).
  static CodecWeights random_conv(std::uint64_t seed) {
    CodecWeights w = conv_architecture();
    RngStream rng(seed);
    for (auto& layer : w.encoder) {
      layer.init_he(rng);
      for (double& v : layer.weight) v = std::fabs(v);
    }
    for (auto& layer : w.decoder) layer.init_he(rng);
    return w;
  }

  int total_stride() const { return backend == Backend::identity ? 1 : 4; }

  std::vector<Tensor> to_tensors() const {
    detail::require(backend == Backend::conv, ErrorKind::invalid_parameter, "identity codec has no tensors");
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < encoder.size(); ++i) nn::append_tensors(encoder[i], "encoder." + std::to_string(i), out);
    for (std::size_t i = 0; i < decoder.size(); ++i) nn::append_tensors(decoder[i], "decoder." + std::to_string(i), out);
    return out;
  }

  static CodecWeights from_tensors(const std::vector<Tensor>& tensors) {
    CodecWeights w = conv_architecture();
    detail::require(tensors.size() == 2 * (w.encoder.size() + w.decoder.size()), ErrorKind::invalid_shape,
                    "codec weights: expected " + std::to_string(2 * (w.encoder.size() + w.decoder.size())) +
                        " tensors, found " + std::to_string(tensors.size()));
    for (std::size_t i = 0; i < w.encoder.size(); ++i)
      nn::load_tensors_into(w.encoder[i], "encoder." + std::to_string(i), tensors);
    for (std::size_t i = 0; i < w.decoder.size(); ++i)
      nn::load_tensors_into(w.decoder[i], "decoder." + std::to_string(i), tensors);
    return w;
  }

  void save(const std::filesystem::path& path) const { save_tensors(path, to_tensors()); }
  static CodecWeights load(const std::filesystem::path& path) { return from_tensors(load_tensors(path)); }
};

inline FeatureMap encode(const Image& img, const CodecWeights& w) {
  if (w.backend == Backend::identity) return to_feature_map(to_rgb(img));
  const int s = w.total_stride();
  detail::require(img.height() % s == 0 && img.width() % s == 0, ErrorKind::invalid_shape,
                  "encode: image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                      " is not divisible by the encoder stride " + std::to_string(s));
  const Image rgb = to_rgb(img);
  FeatureMap f = to_feature_map(rgb.range() == Range::real ? rgb : convert_range(rgb, Range::unit));
  for (const auto& layer : w.encoder) {
    f = nn::conv_forward(layer, f);
    nn::relu_inplace(f);
  }
  return f;
}

// out[c] = style_std[c] * (content[c] - content_mean[c]) / content_std[c] + style_mean[c],
// statistics taken over all spatial positions (population variance). Spatial
// sizes of content and style may differ.
inline FeatureMap adain(const FeatureMap& content, const FeatureMap& style) {
  detail::require(content.channels == style.channels, ErrorKind::invalid_shape,
                  "adain: content has " + std::to_string(content.channels) + " channels, style has " +
                      std::to_string(style.channels));
  const ChannelStats cs = channel_stats(content.data, content.pixels(), content.channels);
  const ChannelStats ss = channel_stats(style.data, style.pixels(), style.channels);
  for (int c = 0; c < content.channels; ++c) {
    if (!(cs.stddev[c] > 1e-8)) {
      detail::fail(ErrorKind::degenerate,
                   "adain: content channel " + std::to_string(c) + " has zero variance; dither constant inputs first");
    }
  }
  FeatureMap out(content.height, content.width, content.channels);
  for (std::size_t p = 0; p < content.pixels(); ++p) {
    for (int c = 0; c < content.channels; ++c) {
      const std::size_t i = p * content.channels + c;
      out.data[i] = ss.stddev[c] * ((content.data[i] - cs.mean[c]) / cs.stddev[c]) + ss.mean[c];
    }
  }
  return out;
}

// Unit-range image, clamped to [0, 1].
inline Image decode(const FeatureMap& f, const CodecWeights& w) {
  if (w.backend == Backend::identity) {
    detail::require(f.channels == 3, ErrorKind::invalid_shape, "decode: identity backend expects 3 channels");
    Image img = to_image(f, Range::unit);
    img.clamp_to_range();
    return img;
  }
  detail::require(f.channels == w.decoder.front().in_channels, ErrorKind::invalid_shape,
                  "decode: expected " + std::to_string(w.decoder.front().in_channels) + " feature channels, got " +
                      std::to_string(f.channels));
  FeatureMap x = f;
  for (std::size_t i = 0; i < w.decoder.size(); ++i) {
    if (i + 1 < w.decoder.size()) x = nn::upsample_nearest2(x);
    x = nn::conv_forward(w.decoder[i], x);
    if (i + 1 < w.decoder.size()) nn::relu_inplace(x);
  }
  Image img = to_image(x, Range::unit);
  img.clamp_to_range();
  return img;
}

// X_GTR = decode(adain(encode(x), encode(t))). Inputs of any range tag are
// brought to unit range first; output is unit range with x's dimensions.
inline Image gtr_stylize(const Image& x, const Image& t, const CodecWeights& w) {
  const Image xu = convert_range(to_rgb(x), Range::unit);
  const Image tu = convert_range(to_rgb(t), Range::unit);
  return decode(adain(encode(xu, w), encode(tu, w)), w);
}

}  // namespace texrand::gtr
