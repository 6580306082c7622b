#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/image.hpp"

namespace texrand {

// Unbounded H x W x C activation tensor, same interleaved layout as Image.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
    detail::require(h > 0 && w > 0 && c > 0, ErrorKind::invalid_shape, "FeatureMap: dimensions must be positive");
  }

  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const noexcept { return data.size(); }
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  double& at(int y, int x, int c) { return data[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data[index(y, x, c)]; }

  bool same_shape(const FeatureMap& o) const noexcept {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool operator==(const FeatureMap&) const = default;
};

inline FeatureMap to_feature_map(const Image& img) {
  FeatureMap f(img.height(), img.width(), img.channels());
  std::copy(img.data().begin(), img.data().end(), f.data.begin());
  return f;
}

inline Image to_image(const FeatureMap& f, Range range) {
  detail::require(f.channels == 1 || f.channels == 3, ErrorKind::invalid_shape,
                  "to_image: feature map must have 1 or 3 channels, got " + std::to_string(f.channels));
  return Image(f.height, f.width, f.channels, range, f.data);
}

inline void require_same_shape(const FeatureMap& a, const FeatureMap& b, const char* what) {
  detail::require(a.same_shape(b), ErrorKind::invalid_shape, std::string(what) + ": feature shapes differ");
}

}  // namespace texrand
