#pragma once

// Independent reference implementations used by the tests. Nothing here calls
// into the library except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <queue>
#include <vector>

namespace oracle {

struct Raster {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;
  double at(int y, int x, int ch) const { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
};

// Mirror (reflect-101) index: -1 -> 1, n -> n-2.
inline int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

inline double gaussian_tap(double sigma, int dy, int dx) { return std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma)); }

// Full 2-D taps for a normalised Gaussian, row-major (2r+1)^2.
inline std::vector<double> gaussian_taps(double sigma, int r) {
  std::vector<double> t;
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      t.push_back(gaussian_tap(sigma, dy, dx));
      sum += t.back();
    }
  for (double& x : t) x /= sum;
  return t;
}

inline Raster convolve(const Raster& in, const std::vector<double>& taps, int r) {
  Raster out = in;
  const int k = 2 * r + 1;
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x)
      for (int ch = 0; ch < in.c; ++ch) {
        double s = 0.0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            s += taps[static_cast<std::size_t>(dy + r) * k + (dx + r)] * in.at(mirror(y + dy, in.h), mirror(x + dx, in.w), ch);
        out.v[(static_cast<std::size_t>(y) * in.w + x) * in.c + ch] = s;
      }
  return out;
}

struct Stats {
  std::vector<double> mean, stddev;
};

// Two passes: mean first, then the sum of squared deviations.
inline Stats two_pass_stats(const std::vector<double>& v, int channels) {
  const std::size_t n = v.size() / channels;
  Stats s{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  for (int c = 0; c < channels; ++c) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) sum += v[i * channels + c];
    const long double m = sum / n;
    long double ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double d = v[i * channels + c] - m;
      ss += d * d;
    }
    s.mean[c] = static_cast<double>(m);
    s.stddev[c] = static_cast<double>(std::sqrt(ss / n));
  }
  return s;
}

// Sobel magnitude on byte-scale luma of a unit-range image.
inline std::vector<double> sobel_magnitude(const Raster& unit_img) {
  std::vector<double> luma(static_cast<std::size_t>(unit_img.h) * unit_img.w);
  for (int y = 0; y < unit_img.h; ++y)
    for (int x = 0; x < unit_img.w; ++x) {
      double l = unit_img.at(y, x, 0);
      if (unit_img.c == 3) l = 0.299 * unit_img.at(y, x, 0) + 0.587 * unit_img.at(y, x, 1) + 0.114 * unit_img.at(y, x, 2);
      luma[static_cast<std::size_t>(y) * unit_img.w + x] = 255.0 * l;
    }
  auto L = [&](int y, int x) {
    return luma[static_cast<std::size_t>(mirror(y, unit_img.h)) * unit_img.w + mirror(x, unit_img.w)];
  };
  std::vector<double> mag(luma.size());
  for (int y = 0; y < unit_img.h; ++y)
    for (int x = 0; x < unit_img.w; ++x) {
      const double gx = (L(y - 1, x + 1) + 2 * L(y, x + 1) + L(y + 1, x + 1)) - (L(y - 1, x - 1) + 2 * L(y, x - 1) + L(y + 1, x - 1));
      const double gy = (L(y + 1, x - 1) + 2 * L(y + 1, x) + L(y + 1, x + 1)) - (L(y - 1, x - 1) + 2 * L(y - 1, x) + L(y - 1, x + 1));
      mag[static_cast<std::size_t>(y) * unit_img.w + x] = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

inline double complexity(const Raster& unit_img, double eps) {
  const auto mag = sobel_magnitude(unit_img);
  std::size_t n = 0;
  for (double m : mag) n += m >= eps;
  return static_cast<double>(n) / mag.size();
}

// Exact integer count for 8-bit images (values 0..255) and integer eps:
// 1000 * luma = 299 R + 587 G + 114 B, compared as gx^2 + gy^2 >= (1000 eps)^2.
inline double complexity_bytes(const Raster& byte_img, std::int64_t eps) {
  std::vector<std::int64_t> luma(static_cast<std::size_t>(byte_img.h) * byte_img.w);
  for (int y = 0; y < byte_img.h; ++y)
    for (int x = 0; x < byte_img.w; ++x) {
      auto b = [&](int ch) { return static_cast<std::int64_t>(std::lround(byte_img.at(y, x, ch))); };
      luma[static_cast<std::size_t>(y) * byte_img.w + x] = byte_img.c == 3 ? 299 * b(0) + 587 * b(1) + 114 * b(2) : 1000 * b(0);
    }
  auto L = [&](int y, int x) {
    return luma[static_cast<std::size_t>(mirror(y, byte_img.h)) * byte_img.w + mirror(x, byte_img.w)];
  };
  std::size_t n = 0;
  for (int y = 0; y < byte_img.h; ++y)
    for (int x = 0; x < byte_img.w; ++x) {
      const std::int64_t gx = (L(y - 1, x + 1) + 2 * L(y, x + 1) + L(y + 1, x + 1)) - (L(y - 1, x - 1) + 2 * L(y, x - 1) + L(y + 1, x - 1));
      const std::int64_t gy = (L(y + 1, x - 1) + 2 * L(y + 1, x) + L(y + 1, x + 1)) - (L(y - 1, x - 1) + 2 * L(y - 1, x) + L(y - 1, x + 1));
      n += gx * gx + gy * gy >= 1000000 * eps * eps;
    }
  return static_cast<double>(n) / luma.size();
}

// Maclaurin series of erf in long double; accurate for |x| <= 3.
inline long double erf_series(long double x) {
  long double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-30L) break;
  }
  return sum * 2.0L / std::sqrt(std::numbers::pi_v<long double>);
}

inline double erf_inv_bisect(double target) {
  long double lo = -3.0L, hi = 3.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = (lo + hi) / 2;
    (erf_series(mid) < target ? lo : hi) = mid;
  }
  return static_cast<double>((lo + hi) / 2);
}

// Threshold from ranking: the value below which a (1 - p) fraction lies.
inline double sorted_threshold(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end(), std::greater<>());
  std::size_t k = static_cast<std::size_t>(std::llround(p * v.size()));
  k = std::clamp<std::size_t>(k, 1, v.size());
  return v[k - 1];
}

// 4-connected components of the value-1 pixels; returns component sizes.
inline std::vector<std::size_t> component_sizes(const std::vector<std::uint8_t>& bits, int h, int w) {
  std::vector<char> seen(bits.size(), 0);
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < bits.size(); ++start) {
    if (!bits[start] || seen[start]) continue;
    std::size_t count = 0;
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = 1;
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      ++count;
      const int y = static_cast<int>(i / w), x = static_cast<int>(i % w);
      const int ny[4] = {y - 1, y + 1, y, y};
      const int nx[4] = {x, x, x - 1, x + 1};
      for (int d = 0; d < 4; ++d) {
        if (ny[d] < 0 || ny[d] >= h || nx[d] < 0 || nx[d] >= w) continue;
        const std::size_t j = static_cast<std::size_t>(ny[d]) * w + nx[d];
        if (bits[j] && !seen[j]) {
          seen[j] = 1;
          q.push(j);
        }
      }
    }
    sizes.push_back(count);
  }
  return sizes;
}

// Zero-padded "same" convolution with HWIO weights and given stride.
inline Raster conv_same(const Raster& in, const std::vector<double>& w, const std::vector<double>& b, int k, int out_c,
                        int stride = 1) {
  const int pad = k / 2;
  Raster out;
  out.h = (in.h + 2 * pad - k) / stride + 1;
  out.w = (in.w + 2 * pad - k) / stride + 1;
  out.c = out_c;
  out.v.assign(static_cast<std::size_t>(out.h) * out.w * out_c, 0.0);
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox)
      for (int co = 0; co < out_c; ++co) {
        double s = b[co];
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const int iy = oy * stride + ky - pad, ix = ox * stride + kx - pad;
            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
            for (int ci = 0; ci < in.c; ++ci)
              s += w[((static_cast<std::size_t>(ky) * k + kx) * in.c + ci) * out_c + co] * in.at(iy, ix, ci);
          }
        out.v[(static_cast<std::size_t>(oy) * out.w + ox) * out_c + co] = s;
      }
  return out;
}

inline void relu(Raster& r) {
  for (double& x : r.v) x = std::max(0.0, x);
}

inline Raster upsample2(const Raster& in) {
  Raster out{in.h * 2, in.w * 2, in.c, {}};
  out.v.resize(static_cast<std::size_t>(out.h) * out.w * out.c);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      for (int c = 0; c < in.c; ++c) out.v[(static_cast<std::size_t>(y) * out.w + x) * out.c + c] = in.at(y / 2, x / 2, c);
  return out;
}

// Direct weighted cross-entropy for one pixel set, no shared code with the library.
inline double weighted_ce(const std::vector<double>& logits, const std::vector<std::uint8_t>& labels, int c,
                          const std::vector<double>& weights) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double denom = 0.0;
    for (int k = 0; k < c; ++k) denom += std::exp(logits[p * c + k]);
    total += weights[labels[p]] * -std::log(std::exp(logits[p * c + labels[p]]) / denom);
  }
  return total / n;
}

inline double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / a.size();
}

// Central difference of f with respect to x[i].
inline double central_diff(const std::function<double()>& f, double& x, double h) {
  const double orig = x;
  x = orig + h;
  const double fp = f();
  x = orig - h;
  const double fm = f();
  x = orig;
  return (fp - fm) / (2.0 * h);
}

inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-300});
  return std::fabs(analytic - numeric) / scale;
}

// Relative agreement; derivatives below 1e-6 in magnitude are compared in
// absolute terms (1e-9), where finite-difference rounding dominates.
inline bool grad_close(double analytic, double numeric, double rel_tol) {
  if (std::max(std::fabs(analytic), std::fabs(numeric)) < 1e-6) return std::fabs(analytic - numeric) <= 1e-9;
  return rel_error(analytic, numeric) <= rel_tol;
}

}  // namespace oracle
