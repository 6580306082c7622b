#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/image.hpp"
#include "texrand/image_io.hpp"
#include "texrand/rng.hpp"

// Texture-complexity painting selection: paintings are scored by the fraction
// of "unsmooth" pixels (gradient magnitude >= epsilon) and the candidates that
// land inside a complexity band form the randomisation pool.

namespace texrand::tcps {

struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> magnitude;  // byte-scale units, row-major

  double at(int y, int x) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
};

struct SelectionConfig {
  double epsilon = 20.0;
  double band_min = 0.55;
  double band_max = 0.65;
  int k = 15;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(epsilon > 0.0, ErrorKind::invalid_parameter, "tcps: epsilon must be positive");
    detail::require(0.0 <= band_min && band_min < band_max && band_max <= 1.0, ErrorKind::invalid_parameter,
                    "tcps: band must satisfy 0 <= min < max <= 1");
    detail::require(k >= 1, ErrorKind::invalid_parameter, "tcps: k must be >= 1");
  }

  bool in_band(double complexity) const { return complexity >= band_min && complexity <= band_max; }
};

struct PaintingRecord {
  std::filesystem::path path;
  Image image;
  double texture_complexity = 0.0;
  bool accepted = false;
};

// Luma in thousandths of a byte level (299 R + 587 G + 114 B on byte-scale
// channels). For 8-bit sources every value and Sobel sum below is an exact
// integer, so magnitudes that sit exactly on epsilon compare as exact ties.
inline Image milli_byte_luma(const Image& img) {
  detail::require(img.range() != Range::real, ErrorKind::invalid_parameter,
                  "gradient_field: image must carry a unit or byte range");
  detail::require(img.channels() == 1 || img.channels() == 3, ErrorKind::invalid_shape,
                  "gradient_field: expected 1 or 3 channels, got " + std::to_string(img.channels()));
  const Image bytes = convert_range(img, Range::byte);
  Image out(img.height(), img.width(), 1, Range::real);
  const auto src = bytes.data();
  const auto dst = out.data();
  for (std::size_t p = 0; p < out.pixels(); ++p)
    dst[p] = img.channels() == 3 ? 299.0 * src[3 * p] + 587.0 * src[3 * p + 1] + 114.0 * src[3 * p + 2]
                                 : 1000.0 * src[p];
  return out;
}

// 3x3 Sobel magnitude sqrt(gx^2 + gy^2) on byte-scale luma, mirror borders.
inline GradientField gradient_field(const Image& img) {
  detail::require(img.height() >= 3 && img.width() >= 3, ErrorKind::invalid_parameter,
                  "gradient_field: image must be at least 3x3");
  const Image luma = milli_byte_luma(img);
  const int h = luma.height(), w = luma.width();
  GradientField g{h, w, std::vector<double>(static_cast<std::size_t>(h) * w)};
  for (int y = 0; y < h; ++y) {
    const int ym = reflect_index(y - 1, h), yp = reflect_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = reflect_index(x - 1, w), xp = reflect_index(x + 1, w);
      const double gx = (luma.at(ym, xp) + 2.0 * luma.at(y, xp) + luma.at(yp, xp)) -
                        (luma.at(ym, xm) + 2.0 * luma.at(y, xm) + luma.at(yp, xm));
      const double gy = (luma.at(yp, xm) + 2.0 * luma.at(yp, x) + luma.at(yp, xp)) -
                        (luma.at(ym, xm) + 2.0 * luma.at(ym, x) + luma.at(ym, xp));
      g.magnitude[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy) / 1000.0;
    }
  }
  return g;
}

// Fraction of pixels whose gradient reaches epsilon. Pixels exactly at epsilon
// count as unsmooth; epsilon may be +infinity.
inline double texture_complexity(const GradientField& g, double epsilon) {
  detail::require(epsilon > 0.0, ErrorKind::invalid_parameter, "texture_complexity: epsilon must be positive");
  const auto unsmooth = std::count_if(g.magnitude.begin(), g.magnitude.end(),
                                      [epsilon](double m) { return m >= epsilon; });
  return static_cast<double>(unsmooth) / static_cast<double>(g.magnitude.size());
}

inline double texture_complexity(const Image& img, double epsilon) {
  detail::require(epsilon > 0.0, ErrorKind::invalid_parameter, "texture_complexity: epsilon must be positive");
  return texture_complexity(gradient_field(img), epsilon);
}

// Image files directly inside `dir`, sorted by filename.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  detail::require(std::filesystem::is_directory(dir, ec), ErrorKind::io,
                  "'" + dir.string() + "' is not a readable directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_path(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

inline PaintingRecord score_painting(const std::filesystem::path& path, const SelectionConfig& cfg) {
  PaintingRecord rec;
  rec.path = path;
  rec.image = read_image(path);
  rec.texture_complexity = texture_complexity(rec.image, cfg.epsilon);
  rec.accepted = cfg.in_band(rec.texture_complexity);
  return rec;
}

// Scores every candidate in `dir`, in filename order.
inline std::vector<PaintingRecord> score_directory(const std::filesystem::path& dir, const SelectionConfig& cfg) {
  cfg.validate();
  std::vector<PaintingRecord> records;
  for (const auto& path : list_images(dir)) records.push_back(score_painting(path, cfg));
  return records;
}

// Draws cfg.k distinct accepted records uniformly (partial Fisher-Yates under
// cfg.seed). Returned in draw order.
inline std::vector<PaintingRecord> select_from(std::vector<PaintingRecord> scored, const SelectionConfig& cfg) {
  cfg.validate();
  std::vector<PaintingRecord> accepted;
  for (auto& rec : scored)
    if (rec.accepted) accepted.push_back(std::move(rec));
  const auto have = accepted.size();
  const auto want = static_cast<std::size_t>(cfg.k);
  if (have < want) {
    detail::fail(ErrorKind::insufficient_pool,
                 "insufficient painting pool: " + std::to_string(have) + " candidates in band [" +
                     std::to_string(cfg.band_min) + ", " + std::to_string(cfg.band_max) + "], need " +
                     std::to_string(want) + " (short by " + std::to_string(want - have) + ")");
  }
  RngStream rng(cfg.seed);
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(have - i));
    std::swap(accepted[i], accepted[j]);
  }
  accepted.resize(want);
  return accepted;
}

inline std::vector<PaintingRecord> select_paintings(const std::filesystem::path& dir, const SelectionConfig& cfg) {
  return select_from(score_directory(dir, cfg), cfg);
}

// One uniform draw per call; the painting used for one training iteration.
inline const PaintingRecord& sample_painting(const std::vector<PaintingRecord>& pool, RngStream& rng) {
  detail::require(!pool.empty(), ErrorKind::invalid_parameter, "sample_painting: empty pool");
  return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

}  // namespace texrand::tcps
