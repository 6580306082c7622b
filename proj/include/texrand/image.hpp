#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "texrand/error.hpp"

namespace texrand {

// Declared value domain of an Image.
//   unit: [0, 1]    byte: [0, 255]    real: unbounded (noise and smoothed fields)
enum class Range { unit, byte, real };

inline double range_max(Range r) { return r == Range::byte ? 255.0 : 1.0; }

inline const char* to_string(Range r) {
  switch (r) {
    case Range::unit: return "unit";
    case Range::byte: return "byte";
    case Range::real: return "real";
  }
  return "?";
}

// Height x width x channels raster of doubles, row-major with interleaved
// channels: sample (y, x, c) lives at (y * width + x) * channels + c.
class Image {
 public:
  Image() = default;

  Image(int height, int width, int channels, Range range = Range::unit)
      : height_(height), width_(width), channels_(channels), range_(range) {
    detail::require(height > 0 && width > 0, ErrorKind::invalid_shape,
                    "Image: dimensions must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width));
    detail::require(channels == 1 || channels == 3, ErrorKind::invalid_shape,
                    "Image: channels must be 1 or 3, got " + std::to_string(channels));
    data_.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  }

  Image(int height, int width, int channels, Range range, std::vector<double> data)
      : Image(height, width, channels, range) {
    detail::require(data.size() == data_.size(), ErrorKind::invalid_shape,
                    "Image: data length does not match height*width*channels");
    data_ = std::move(data);
  }

  static Image filled(int height, int width, int channels, double value, Range range = Range::unit) {
    Image img(height, width, channels, range);
    std::fill(img.data_.begin(), img.data_.end(), value);
    return img;
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  Range range() const noexcept { return range_; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::size_t index(int y, int x, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  // True when every sample lies inside the declared range.
  bool in_range() const {
    if (range_ == Range::real) return true;
    const double hi = range_max(range_);
    return std::all_of(data_.begin(), data_.end(), [hi](double v) { return v >= 0.0 && v <= hi; });
  }

  void clamp_to_range() {
    if (range_ == Range::real) return;
    const double hi = range_max(range_);
    for (double& v : data_) v = std::clamp(v, 0.0, hi);
  }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  Range range_ = Range::unit;
  std::vector<double> data_;
};

// Rescales between unit and byte ranges; other conversions are errors.
inline Image convert_range(const Image& img, Range to) {
  if (img.range() == to) return img;
  detail::require(img.range() != Range::real && to != Range::real, ErrorKind::invalid_parameter,
                  "convert_range: cannot convert to or from the real range");
  const double scale = range_max(to) / range_max(img.range());
  Image out(img.height(), img.width(), img.channels(), to);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * scale;
  return out;
}

// Gray images are replicated into three channels; color images pass through.
inline Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.height(), img.width(), 3, img.range());
  for (std::size_t p = 0; p < img.pixels(); ++p)
    for (int c = 0; c < 3; ++c) out.data()[p * 3 + c] = img.data()[p];
  return out;
}

inline Image to_grayscale(const Image& img) {
  detail::require(img.channels() == 3, ErrorKind::invalid_parameter,
                  "to_grayscale: expected 3 channels, got " + std::to_string(img.channels()));
  Image out(img.height(), img.width(), 1, img.range());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < img.pixels(); ++p)
    dst[p] = 0.299 * src[3 * p] + 0.587 * src[3 * p + 1] + 0.114 * src[3 * p + 2];
  return out;
}

// Mirror reflection about the edge samples without repeating them
// (... c b | a b c d | c b a ...), folded as often as needed.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Kernel2D {
  int radius = 0;
  // (2r+1)^2 coefficients, row-major, tap (dy, dx) at (dy + r) * (2r+1) + (dx + r).
  std::vector<double> taps;
  // When present, taps == outer(separable, separable) and convolution runs as
  // two 1-D passes.
  std::vector<double> separable;

  int size() const noexcept { return 2 * radius + 1; }
  double tap(int dy, int dx) const { return taps[static_cast<std::size_t>(dy + radius) * size() + (dx + radius)]; }
};

inline Kernel2D gaussian_kernel(double sigma, int radius) {
  detail::require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::invalid_parameter,
                  "gaussian_kernel: sigma must be positive and finite");
  detail::require(radius >= 1, ErrorKind::invalid_parameter, "gaussian_kernel: radius must be >= 1");
  Kernel2D k;
  k.radius = radius;
  const int n = k.size();
  k.separable.resize(n);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i) * i / (2.0 * sigma * sigma));
    k.separable[i + radius] = v;
    sum += v;
  }
  for (double& v : k.separable) v /= sum;
  k.taps.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k.taps[static_cast<std::size_t>(i) * n + j] = k.separable[i] * k.separable[j];
  return k;
}

// Arbitrary (non-separable) kernel from explicit taps.
inline Kernel2D make_kernel(int radius, std::vector<double> taps) {
  detail::require(radius >= 0, ErrorKind::invalid_parameter, "make_kernel: negative radius");
  const std::size_t n = static_cast<std::size_t>(2 * radius + 1);
  detail::require(taps.size() == n * n, ErrorKind::invalid_shape, "make_kernel: expected (2r+1)^2 taps");
  return Kernel2D{radius, std::move(taps), {}};
}

namespace detail {

// One 1-D pass along rows (horizontal) or columns (vertical) with mirror borders.
inline Image convolve_1d(const Image& img, const std::vector<double>& k, bool horizontal) {
  const int r = static_cast<int>(k.size() / 2);
  const int h = img.height(), w = img.width(), ch = img.channels();
  Image out(h, w, ch, img.range());
  const int n = horizontal ? w : h;
  std::vector<int> idx(static_cast<std::size_t>(n + 2 * r));
  for (int i = -r; i < n + r; ++i) idx[i + r] = reflect_index(i, n);
  auto src = img.data();
  auto dst = out.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int pos = horizontal ? x : y;
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int t = -r; t <= r; ++t) {
          const int q = idx[pos + t + r];
          const std::size_t s = horizontal ? img.index(y, q, c) : img.index(q, x, c);
          acc += k[t + r] * src[s];
        }
        dst[img.index(y, x, c)] = acc;
      }
    }
  }
  return out;
}

}  // namespace detail

// Channel-wise convolution with mirror-reflected borders. Output has the input's
// shape and range tag; callers clamp if the kernel can leave the range.
inline Image convolve(const Image& img, const Kernel2D& k) {
  detail::require(!img.empty(), ErrorKind::invalid_shape, "convolve: empty image");
  if (!k.separable.empty()) {
    return detail::convolve_1d(detail::convolve_1d(img, k.separable, true), k.separable, false);
  }
  const int r = k.radius, n = k.size();
  const int h = img.height(), w = img.width(), ch = img.channels();
  Image out(h, w, ch, img.range());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = reflect_index(y + dy, h);
          for (int dx = -r; dx <= r; ++dx) {
            acc += k.taps[static_cast<std::size_t>(dy + r) * n + (dx + r)] *
                   img.at(yy, reflect_index(x + dx, w), c);
          }
        }
        out.at(y, x, c) = acc;
      }
    }
  }
  return out;
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population: variance divides by N
};

// Two-pass per-channel mean and standard deviation over all pixels.
inline ChannelStats channel_stats(std::span<const double> data, std::size_t pixels, int channels) {
  detail::require(pixels >= 2, ErrorKind::degenerate, "channel_stats: need at least two pixels");
  ChannelStats s{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  for (std::size_t p = 0; p < pixels; ++p)
    for (int c = 0; c < channels; ++c) s.mean[c] += data[p * channels + c];
  for (double& m : s.mean) m /= static_cast<double>(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    for (int c = 0; c < channels; ++c) {
      const double d = data[p * channels + c] - s.mean[c];
      s.stddev[c] += d * d;
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(pixels));
  return s;
}

inline ChannelStats channel_stats(const Image& img) {
  return channel_stats(img.data(), img.pixels(), img.channels());
}

inline Image flip_horizontal(const Image& img) {
  Image out(img.height(), img.width(), img.channels(), img.range());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
  return out;
}

// Bilinear resampling with pixel-center alignment and edge clamping.
inline Image resize_bilinear(const Image& img, int height, int width) {
  Image out(height, width, img.channels(), img.range());
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace texrand
