#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "texrand/image.hpp"
#include "texrand/image_io.hpp"
#include "texrand/rng.hpp"

// Synthetic stand-ins for a painting collection: flat color regions with
// blobby boundaries (palette channels in [0.2, 0.8]) plus a brush-grain layer
// whose strength (`detail`) drives the texture complexity.

namespace texrand {

inline Image procedural_painting(int size, double detail, std::uint64_t seed) {
  RngStream rng(seed);
  const int colors = 3 + static_cast<int>(rng.below(3));
  std::vector<std::array<double, 3>> palette(static_cast<std::size_t>(colors));
  for (auto& col : palette)
    for (double& v : col) v = rng.uniform(0.2, 0.8);

  const Kernel2D blob = gaussian_kernel(size / 16.0, static_cast<int>(size * 3 / 16));
  std::vector<Image> fields;
  for (int j = 0; j < colors; ++j) {
    Image noise(size, size, 1, Range::real);
    for (double& v : noise.data()) v = rng.normal();
    fields.push_back(convolve(noise, blob));
  }

  Image grain(size, size, 1, Range::real);
  for (double& v : grain.data()) v = rng.normal();
  grain = convolve(grain, gaussian_kernel(0.7, 2));
  const double amplitude = 0.05 * detail;

  Image out(size, size, 3, Range::unit);
  for (std::size_t p = 0; p < out.pixels(); ++p) {
    int best = 0;
    for (int j = 1; j < colors; ++j)
      if (fields[j].data()[p] > fields[best].data()[p]) best = j;
    for (int c = 0; c < 3; ++c)
      out.data()[p * 3 + c] = std::clamp(palette[best][c] + amplitude * grain.data()[p], 0.0, 1.0);
  }
  return out;
}

// Writes `count` candidates painting_000.png ... with detail spread over [0, 1].
inline std::vector<std::filesystem::path> write_painting_candidates(const std::filesystem::path& dir, int count,
                                                                    std::uint64_t seed, int size = 96) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  RngStream rng(seed);
  for (int i = 0; i < count; ++i) {
    const double detail = rng.uniform();
    char name[32];
    std::snprintf(name, sizeof(name), "painting_%03d.png", i);
    const auto path = dir / name;
    write_image(path, procedural_painting(size, detail, child_seed(seed, static_cast<std::uint64_t>(i))));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace texrand
