#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "texrand/erf_inv.hpp"
#include "texrand/error.hpp"
#include "texrand/gtr.hpp"
#include "texrand/image.hpp"
#include "texrand/rng.hpp"

// Local texture randomisation: a random-boundary binary mask (thresholded,
// Gaussian-smoothed white noise) selects which pixels take the globally
// stylised image and which keep the source.

namespace texrand::ltr {

struct LtrConfig {
  double lambda_min = 4.0;
  double lambda_max = 16.0;
  double p = 0.5;          // fraction of white (stylised) pixels
  double log_base = 10.0;  // base of the logarithm in gamma = exp(log_b(lambda))
  int kernel_radius = 0;   // 0: ceil(3 * gamma)

  void validate() const {
    detail::require(lambda_min > 0.0 && lambda_min <= lambda_max, ErrorKind::invalid_parameter,
                    "ltr: need 0 < lambda_min <= lambda_max");
    detail::require(p > 0.0 && p < 1.0, ErrorKind::invalid_parameter, "ltr: p must lie in (0, 1)");
    detail::require(log_base > 0.0 && log_base != 1.0, ErrorKind::invalid_parameter,
                    "ltr: log_base must be positive and != 1");
    detail::require(kernel_radius >= 0, ErrorKind::invalid_parameter, "ltr: kernel_radius must be >= 0");
  }
};

struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major
  double lambda_used = 0.0;
  double p = 0.5;
  std::uint64_t seed = 0;  // noise seed; with lambda_used and p, reproduces bits via render_mask

  std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }

  double white_fraction() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return static_cast<double>(n) / static_cast<double>(bits.size());
  }

  Mask inverted() const {
    Mask m = *this;
    for (auto& b : m.bits) b = static_cast<std::uint8_t>(1 - b);
    return m;
  }

  // Single-channel unit image with white = 1.
  Image to_image() const {
    Image img(height, width, 1, Range::unit);
    for (std::size_t i = 0; i < bits.size(); ++i) img.data()[i] = bits[i];
    return img;
  }

  // Pixels at or above half of the range maximum are white.
  static Mask from_image(const Image& img) {
    detail::require(img.channels() == 1, ErrorKind::invalid_shape, "mask image must have one channel");
    Mask m;
    m.height = img.height();
    m.width = img.width();
    m.bits.resize(img.pixels());
    const double half = 0.5 * range_max(img.range());
    for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = img.data()[i] >= half ? 1 : 0;
    return m;
  }
};

// gamma = exp(log_base(lambda)).
inline double gamma_from_lambda(double lambda, double log_base) {
  detail::require(lambda > 0.0, ErrorKind::invalid_parameter, "gamma_from_lambda: lambda must be positive");
  detail::require(log_base > 0.0 && log_base != 1.0, ErrorKind::invalid_parameter,
                  "gamma_from_lambda: log_base must be positive and != 1");
  return std::exp(std::log(lambda) / std::log(log_base));
}

inline int kernel_radius_for(double gamma, const LtrConfig& cfg) {
  return cfg.kernel_radius > 0 ? cfg.kernel_radius : std::max(1, static_cast<int>(std::ceil(3.0 * gamma)));
}

// White-proportion threshold alpha = mu + sqrt(2) * sigma * erf_inv(1 - 2p), so
// that about a fraction p of a Gaussian field satisfies s >= alpha.
inline double threshold_for_proportion(const Image& s, double p) {
  detail::require(s.channels() == 1, ErrorKind::invalid_shape, "threshold_for_proportion: field must be single-channel");
  detail::require(p > 0.0 && p < 1.0, ErrorKind::invalid_parameter, "threshold_for_proportion: p must lie in (0, 1)");
  const ChannelStats st = channel_stats(s);
  const double mu = st.mean[0], sigma = st.stddev[0];
  if (!(sigma > 1e-12 * std::max(1.0, std::fabs(mu)))) {
    detail::fail(ErrorKind::degenerate, "threshold_for_proportion: field has zero variance");
  }
  return mu + std::numbers::sqrt2 * sigma * erf_inv(1.0 - 2.0 * p);
}

// i.i.d. N(0, 1) noise from `seed`, smoothed by a Gaussian of std gamma.
inline Image smoothed_noise(int height, int width, double gamma, int radius, std::uint64_t seed) {
  Image noise(height, width, 1, Range::real);
  RngStream rng(seed);
  for (double& v : noise.data()) v = rng.normal();
  return convolve(noise, gaussian_kernel(gamma, radius));
}

inline Mask binarize(const Image& s, double alpha) {
  Mask m;
  m.height = s.height();
  m.width = s.width();
  m.bits.resize(s.pixels());
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = s.data()[i] >= alpha ? 1 : 0;
  return m;
}

// Deterministic mask for an explicit (lambda, seed).
inline Mask render_mask(int height, int width, double lambda, std::uint64_t seed, const LtrConfig& cfg) {
  cfg.validate();
  const double gamma = gamma_from_lambda(lambda, cfg.log_base);
  const Image s = smoothed_noise(height, width, gamma, kernel_radius_for(gamma, cfg), seed);
  Mask m = binarize(s, threshold_for_proportion(s, cfg.p));
  m.lambda_used = lambda;
  m.p = cfg.p;
  m.seed = seed;
  return m;
}

// Draws lambda ~ U[lambda_min, lambda_max] and a noise seed from `rng`, then
// renders. A degenerate smoothed field is retried with derived child seeds,
// three attempts in total.
inline Mask generate_mask(int height, int width, const LtrConfig& cfg, RngStream& rng) {
  cfg.validate();
  detail::require(height >= 32 && width >= 32, ErrorKind::invalid_shape,
                  "generate_mask: masks must be at least 32x32");
  const double lambda = rng.uniform(cfg.lambda_min, cfg.lambda_max);
  std::uint64_t seed = rng.next_u64();
  for (int attempt = 0;; ++attempt) {
    try {
      return render_mask(height, width, lambda, seed, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate || attempt == 2) throw;
      seed = child_seed(seed, static_cast<std::uint64_t>(attempt) + 1);
    }
  }
}

// Per pixel: mask 0 keeps x, mask 1 takes x_gtr.
inline Image mix(const Image& x, const Image& x_gtr, const Mask& m) {
  detail::require(x.same_shape(x_gtr), ErrorKind::invalid_shape, "mix: source and stylised images differ in shape");
  detail::require(x.range() == x_gtr.range(), ErrorKind::invalid_parameter, "mix: images carry different range tags");
  detail::require(m.height == x.height() && m.width == x.width(), ErrorKind::invalid_shape,
                  "mix: mask size differs from image size");
  Image out = x;
  const int ch = x.channels();
  for (std::size_t p = 0; p < x.pixels(); ++p) {
    if (!m.bits[p]) continue;
    for (int c = 0; c < ch; ++c) out.data()[p * ch + c] = x_gtr.data()[p * ch + c];
  }
  return out;
}

struct LtrResult {
  Image gtr;  // globally stylised image
  Mask mask;
  Image ltr;  // locally stylised image
};

inline LtrResult ltr_randomize_detailed(const Image& x, const Image& t, const gtr::CodecWeights& w,
                                        const LtrConfig& cfg, RngStream& rng) {
  LtrResult r;
  r.gtr = gtr::gtr_stylize(x, t, w);
  r.mask = generate_mask(x.height(), x.width(), cfg, rng);
  r.ltr = mix(convert_range(to_rgb(x), Range::unit), r.gtr, r.mask);
  return r;
}

inline Image ltr_randomize(const Image& x, const Image& t, const gtr::CodecWeights& w, const LtrConfig& cfg,
                           RngStream& rng) {
  return ltr_randomize_detailed(x, t, w, cfg, rng).ltr;
}

}  // namespace texrand::ltr
