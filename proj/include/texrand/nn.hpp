#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/feature_map.hpp"
#include "texrand/rng.hpp"
#include "texrand/tensor_file.hpp"

// Convolution layers shared by the conv codec and the segmentation model.
// Convolutions run as im2col followed by GEMM, one block of output pixels at
// a time.

namespace texrand::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMatrix>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

// Square-kernel 2-D convolution with zero padding.
// Weights are stored HWIO: weight[((ky * k + kx) * in + ci) * out + co].
struct Conv2d {
  int kernel = 3;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int padding = 1;
  std::vector<double> weight;
  std::vector<double> bias;

  Conv2d() = default;
  Conv2d(int k, int in, int out, int stride_ = 1, int padding_ = -1)
      : kernel(k), in_channels(in), out_channels(out), stride(stride_),
        padding(padding_ < 0 ? k / 2 : padding_),
        weight(static_cast<std::size_t>(k) * k * in * out, 0.0),
        bias(static_cast<std::size_t>(out), 0.0) {}

  std::size_t parameter_count() const { return weight.size() + bias.size(); }
  int out_size(int n) const { return (n + 2 * padding - kernel) / stride + 1; }

  double& w(int ky, int kx, int ci, int co) {
    return weight[((static_cast<std::size_t>(ky) * kernel + kx) * in_channels + ci) * out_channels + co];
  }
  double w(int ky, int kx, int ci, int co) const {
    return weight[((static_cast<std::size_t>(ky) * kernel + kx) * in_channels + ci) * out_channels + co];
  }

  // He (fan-in) normal initialisation; biases start at zero.
  void init_he(RngStream& rng) {
    const double stddev = std::sqrt(2.0 / (static_cast<double>(kernel) * kernel * in_channels));
    for (double& v : weight) v = stddev * rng.normal();
    std::fill(bias.begin(), bias.end(), 0.0);
  }
};

struct Conv2dGrad {
  std::vector<double> weight;
  std::vector<double> bias;

  explicit Conv2dGrad(const Conv2d& layer = {})
      : weight(layer.weight.size(), 0.0), bias(layer.bias.size(), 0.0) {}
};

// Patch matrix rows [first, first + n): one row per output pixel (row-major
// over the output), kernel*kernel*in columns ordered as the HWIO weight rows.
inline void im2col_rows(const Conv2d& layer, const FeatureMap& in, Eigen::Index first, Eigen::Index n, RowMatrix& col) {
  const int wo = layer.out_size(in.width);
  const int k = layer.kernel, cin = in.channels;
  col.resize(n, static_cast<Eigen::Index>(k) * k * cin);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int oy = static_cast<int>((first + r) / wo), ox = static_cast<int>((first + r) % wo);
    double* row = col.data() + r * col.cols();
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * layer.stride + ky - layer.padding;
      for (int kx = 0; kx < k; ++kx) {
        const int ix = ox * layer.stride + kx - layer.padding;
        double* dst = row + (ky * k + kx) * cin;
        if (iy < 0 || iy >= in.height || ix < 0 || ix >= in.width) {
          std::fill(dst, dst + cin, 0.0);
        } else {
          const double* src = in.data.data() + in.index(iy, ix, 0);
          std::copy(src, src + cin, dst);
        }
      }
    }
  }
}

inline RowMatrix im2col(const Conv2d& layer, const FeatureMap& in) {
  RowMatrix col;
  im2col_rows(layer, in, 0, static_cast<Eigen::Index>(layer.out_size(in.height)) * layer.out_size(in.width), col);
  return col;
}

// Scatters patch-matrix rows [first, first + dcol.rows()) back onto `din`.
inline void col2im_add(const Conv2d& layer, const RowMatrix& dcol, FeatureMap& din, Eigen::Index first = 0) {
  const int wo = layer.out_size(din.width);
  const int k = layer.kernel, cin = din.channels;
  for (Eigen::Index r = 0; r < dcol.rows(); ++r) {
    const int oy = static_cast<int>((first + r) / wo), ox = static_cast<int>((first + r) % wo);
    const double* row = dcol.data() + r * dcol.cols();
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * layer.stride + ky - layer.padding;
      if (iy < 0 || iy >= din.height) continue;
      for (int kx = 0; kx < k; ++kx) {
        const int ix = ox * layer.stride + kx - layer.padding;
        if (ix < 0 || ix >= din.width) continue;
        double* dst = din.data.data() + din.index(iy, ix, 0);
        const double* src = row + (ky * k + kx) * cin;
        for (int c = 0; c < cin; ++c) dst[c] += src[c];
      }
    }
  }
}

// Output pixels per GEMM block. Full-image patch matrices are several MB and
// fall out of L2; blocks of this size stay resident (training ~1.3x faster).
inline constexpr Eigen::Index kConvBlock = 256;

inline FeatureMap conv_forward(const Conv2d& layer, const FeatureMap& in) {
  detail::require(in.channels == layer.in_channels, ErrorKind::invalid_shape,
                  "conv: expected " + std::to_string(layer.in_channels) + " input channels, got " +
                      std::to_string(in.channels));
  const int ho = layer.out_size(in.height), wo = layer.out_size(in.width);
  detail::require(ho > 0 && wo > 0, ErrorKind::invalid_shape, "conv: input smaller than kernel");
  FeatureMap out(ho, wo, layer.out_channels);
  const Eigen::Index rows = static_cast<Eigen::Index>(ho) * wo;
  RowMap out_mat(out.data.data(), rows, layer.out_channels);
  ConstRowMap w_mat(layer.weight.data(), static_cast<Eigen::Index>(layer.kernel) * layer.kernel * layer.in_channels,
                    layer.out_channels);
  Eigen::Map<const Eigen::RowVectorXd> b(layer.bias.data(), layer.out_channels);
  thread_local RowMatrix col;
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kConvBlock) {
    const Eigen::Index n = std::min(kConvBlock, rows - r0);
    im2col_rows(layer, in, r0, n, col);
    out_mat.middleRows(r0, n).noalias() = col * w_mat;
  }
  out_mat.rowwise() += b;
  return out;
}

// Accumulates parameter gradients into `grad` given the forward input `in`;
// writes the input gradient to `din` when requested (it must already have the
// input's shape).
inline void conv_backward(const Conv2d& layer, const FeatureMap& in, const FeatureMap& dout, Conv2dGrad& grad,
                          FeatureMap* din) {
  const Eigen::Index rows = static_cast<Eigen::Index>(dout.pixels());
  ConstRowMap dout_mat(dout.data.data(), rows, layer.out_channels);
  const Eigen::Index kk = static_cast<Eigen::Index>(layer.kernel) * layer.kernel * layer.in_channels;
  RowMap gw(grad.weight.data(), kk, layer.out_channels);
  ConstRowMap w_mat(layer.weight.data(), kk, layer.out_channels);
  // Plain loop: Eigen's vectorised reductions peel by address alignment, which
  // would make the summation order depend on where the heap put the buffer.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (int co = 0; co < layer.out_channels; ++co) grad.bias[co] += dout_mat(r, co);
  if (din) std::fill(din->data.begin(), din->data.end(), 0.0);
  thread_local RowMatrix col, dcol;
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kConvBlock) {
    const Eigen::Index n = std::min(kConvBlock, rows - r0);
    im2col_rows(layer, in, r0, n, col);
    gw.noalias() += col.transpose() * dout_mat.middleRows(r0, n);
    if (din) {
      dcol.resize(n, kk);
      dcol.noalias() = dout_mat.middleRows(r0, n) * w_mat.transpose();
      col2im_add(layer, dcol, *din, r0);
    }
  }
}

inline void relu_inplace(FeatureMap& f) {
  for (double& v : f.data) v = v > 0.0 ? v : 0.0;
}

// Zeroes gradient entries where the forward activation was clipped.
inline void relu_backward_inplace(const FeatureMap& activated, FeatureMap& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i)
    if (activated.data[i] <= 0.0) grad.data[i] = 0.0;
}

inline FeatureMap upsample_nearest2(const FeatureMap& in) {
  FeatureMap out(in.height * 2, in.width * 2, in.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < in.channels; ++c) out.at(y, x, c) = in.at(y / 2, x / 2, c);
  return out;
}

// Serialised as "<prefix>.weight" (dims k, k, in, out) and "<prefix>.bias".
inline void append_tensors(const Conv2d& layer, const std::string& prefix, std::vector<Tensor>& out) {
  const auto k = static_cast<std::uint32_t>(layer.kernel);
  out.push_back({prefix + ".weight",
                 {k, k, static_cast<std::uint32_t>(layer.in_channels), static_cast<std::uint32_t>(layer.out_channels)},
                 layer.weight});
  out.push_back({prefix + ".bias", {static_cast<std::uint32_t>(layer.out_channels)}, layer.bias});
}

// Loads a layer whose shape must match `expected` exactly.
inline void load_tensors_into(Conv2d& expected, const std::string& prefix, const std::vector<Tensor>& tensors) {
  const Tensor& w = find_tensor(tensors, prefix + ".weight");
  const Tensor& b = find_tensor(tensors, prefix + ".bias");
  const std::vector<std::uint32_t> wdims = {
      static_cast<std::uint32_t>(expected.kernel), static_cast<std::uint32_t>(expected.kernel),
      static_cast<std::uint32_t>(expected.in_channels), static_cast<std::uint32_t>(expected.out_channels)};
  detail::require(w.dims == wdims, ErrorKind::invalid_shape, "tensor '" + w.name + "' has the wrong shape");
  detail::require(b.dims == std::vector<std::uint32_t>{static_cast<std::uint32_t>(expected.out_channels)},
                  ErrorKind::invalid_shape, "tensor '" + b.name + "' has the wrong shape");
  expected.weight = w.values;
  expected.bias = b.values;
}

}  // namespace texrand::nn
