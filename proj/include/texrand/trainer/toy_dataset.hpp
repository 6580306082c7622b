#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/image.hpp"
#include "texrand/rng.hpp"
#include "texrand/trainer/seg_model.hpp"

// Procedural texture-shift benchmark.
//
// Each 64x64 sample holds 1-3 shapes (circle = 1, rectangle = 2, triangle = 3)
// over background (0). Every region is painted with its class color plus a
// procedural texture:
//
//   source  textures {stripes, dots, flat}, amplitude 0.08
//   target  textures {checker, grain, gradient}, amplitude 0.12, and a
//           per-image color cast (per-channel gain in [0.5, 1], offset in
//           [-0.1, 0.25]) applied to the class colors
//
// Geometry depends only on (seed, index), so the two domains share label maps
// for equal seeds.

namespace texrand::trainer {

inline constexpr int kToySize = 64;
inline constexpr int kToyClasses = 4;

enum class Domain { source, target };

inline const char* to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

inline Domain parse_domain(const std::string& s) {
  if (s == "source") return Domain::source;
  if (s == "target") return Domain::target;
  detail::fail(ErrorKind::invalid_parameter, "unknown domain '" + s + "' (expected source or target)");
}

struct ToySample {
  Image image;  // 64 x 64 x 3, unit range
  LabelMap label;
};

namespace toy {

enum class Texture { stripes, dots, flat, checker, grain, gradient };

inline constexpr std::array<std::array<double, 3>, kToyClasses> kClassColors = {{
    {0.5, 0.5, 0.5},  // background
    {0.8, 0.3, 0.3},  // circle
    {0.3, 0.8, 0.3},  // rectangle
    {0.3, 0.3, 0.8},  // triangle
}};

inline LabelMap draw_shapes(RngStream& rng) {
  const int n = kToySize;
  LabelMap label(n, n, 0);
  const int count = 1 + static_cast<int>(rng.below(3));
  for (int s = 0; s < count; ++s) {
    const int cls = 1 + static_cast<int>(rng.below(3));
    const double cy = rng.uniform(10.0, 54.0);
    const double cx = rng.uniform(10.0, 54.0);
    const double r = rng.uniform(8.0, 18.0);
    const double hh = r * rng.uniform(0.6, 1.0);
    const double hw = r * rng.uniform(0.6, 1.0);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double dy = y - cy, dx = x - cx;
        bool inside = false;
        if (cls == 1) {
          inside = dy * dy + dx * dx <= r * r;
        } else if (cls == 2) {
          inside = std::fabs(dy) <= hh && std::fabs(dx) <= hw;
        } else {
          // apex at cy - r, base at cy + 0.7 r
          inside = y >= cy - r && y <= cy + 0.7 * r && std::fabs(dx) <= (y - (cy - r)) * 0.8;
        }
        if (inside) label.at(y, x) = static_cast<std::uint8_t>(cls);
      }
    }
  }
  return label;
}

// Zero-centred pattern roughly within [-1, 1], one value per pixel.
inline std::vector<double> texture_field(Texture kind, RngStream& rng) {
  const int n = kToySize;
  std::vector<double> f(static_cast<std::size_t>(n) * n, 0.0);
  switch (kind) {
    case Texture::stripes: {
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double freq = rng.uniform(0.15, 0.4);
      const double phase = rng.uniform(0.0, 6.0);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const double s = std::sin(std::numbers::pi * freq * (x * std::cos(theta) + y * std::sin(theta)) + phase);
          f[static_cast<std::size_t>(y) * n + x] = s >= 0.0 ? 1.0 : -1.0;
        }
      break;
    }
    case Texture::dots: {
      const int spacing = 4 + static_cast<int>(rng.below(4));
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          f[static_cast<std::size_t>(y) * n + x] = (y % spacing < 2 && x % spacing < 2) ? 1.0 : -0.3;
      break;
    }
    case Texture::flat:
      break;
    case Texture::checker: {
      const int cell = 2 + static_cast<int>(rng.below(4));
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f[static_cast<std::size_t>(y) * n + x] = ((y / cell + x / cell) % 2 == 0) ? 1.0 : -1.0;
      break;
    }
    case Texture::grain:
      for (double& v : f) v = rng.normal();
      break;
    case Texture::gradient: {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double c = n / 2.0;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          f[static_cast<std::size_t>(y) * n + x] = ((x - c) * std::cos(theta) + (y - c) * std::sin(theta)) / c;
      break;
    }
  }
  return f;
}

inline Image paint(const LabelMap& label, Domain domain, RngStream& rng) {
  const int n = kToySize;
  const bool target = domain == Domain::target;
  std::array<double, 3> gain{1.0, 1.0, 1.0}, offset{0.0, 0.0, 0.0};
  if (target) {
    for (double& g : gain) g = rng.uniform(0.5, 1.0);
    for (double& o : offset) o = rng.uniform(-0.1, 0.25);
  }
  const double amplitude = target ? 0.12 : 0.08;
  Image img(n, n, 3, Range::unit);
  for (int cls = 0; cls < kToyClasses; ++cls) {
    const auto pick = static_cast<int>(rng.below(3));
    const Texture kind = target ? std::array{Texture::checker, Texture::grain, Texture::gradient}[pick]
                                : std::array{Texture::stripes, Texture::dots, Texture::flat}[pick];
    const std::vector<double> tex = texture_field(kind, rng);
    std::array<double, 3> tint{};
    for (double& t : tint) t = rng.uniform(0.5, 1.0);
    for (std::size_t p = 0; p < label.size(); ++p) {
      if (label.labels[p] != cls) continue;
      for (int c = 0; c < 3; ++c)
        img.data()[p * 3 + c] = kClassColors[cls][c] * gain[c] + offset[c] + amplitude * tex[p] * tint[c];
    }
  }
  for (double& v : img.data()) v = std::clamp(v + 0.02 * rng.normal(), 0.0, 1.0);
  return img;
}

}  // namespace toy

// Deterministic per (domain, n, seed); sample i depends only on (seed, i) and domain.
inline std::vector<ToySample> gen_toy_dataset(Domain domain, int n, std::uint64_t seed) {
  detail::require(n >= 1, ErrorKind::invalid_parameter, "gen_toy_dataset: n must be >= 1");
  std::vector<ToySample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t sample_seed = child_seed(seed, static_cast<std::uint64_t>(i));
    RngStream geometry(child_seed(sample_seed, 0));
    RngStream appearance(child_seed(sample_seed, domain == Domain::source ? 1 : 2));
    ToySample s;
    s.label = toy::draw_shapes(geometry);
    s.image = toy::paint(s.label, domain, appearance);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace texrand::trainer
