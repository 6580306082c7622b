#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/image.hpp"

// 8-bit PNG (libpng simplified API) and binary PGM/PPM. Images load as byte
// range; unit-range images are scaled by 255 and rounded on write.

namespace texrand {

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

inline std::vector<std::uint8_t> to_bytes(const Image& img) {
  detail::require(img.range() != Range::real, ErrorKind::invalid_parameter,
                  "write_image: real-range images must be mapped to unit or byte first");
  const double scale = img.range() == Range::byte ? 1.0 : 255.0;
  std::vector<std::uint8_t> bytes(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i] * scale), 0L, 255L));
  return bytes;
}

inline Image from_bytes(int h, int w, int channels, const std::uint8_t* bytes) {
  Image img(h, w, channels, Range::byte);
  auto dst = img.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = bytes[i];
  return img;
}

inline Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    detail::fail(ErrorKind::io, "cannot read PNG '" + path.string() + "': " + png.message);
  }
  if (png.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    detail::fail(ErrorKind::format, "unsupported bit depth in '" + path.string() + "' (16-bit PNG)");
  }
  const int channels = (png.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    detail::fail(ErrorKind::io, "cannot decode PNG '" + path.string() + "': " + msg);
  }
  return from_bytes(static_cast<int>(png.height), static_cast<int>(png.width), channels, buf.data());
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes = to_bytes(img);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    detail::fail(ErrorKind::io, "cannot write PNG '" + path.string() + "': " + png.message);
  }
}

// Reads one whitespace-delimited header token, skipping '#' comments.
inline int read_pnm_int(std::istream& in, const std::string& name) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  std::string token;
  while (ch != EOF && std::isdigit(ch)) {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  detail::require(!token.empty(), ErrorKind::format, "malformed PNM header in '" + name + "'");
  return std::stoi(token);
}

inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  detail::require(in && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'), ErrorKind::format,
                  "'" + path.string() + "' is not a binary PGM/PPM");
  const int channels = magic[1] == '6' ? 3 : 1;
  const int w = read_pnm_int(in, path.string());
  const int h = read_pnm_int(in, path.string());
  const int maxval = read_pnm_int(in, path.string());
  detail::require(maxval == 255, ErrorKind::format,
                  "unsupported bit depth in '" + path.string() + "' (maxval " + std::to_string(maxval) + ")");
  detail::require(w > 0 && h > 0, ErrorKind::format, "invalid PNM dimensions in '" + path.string() + "'");
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  detail::require(static_cast<std::size_t>(in.gcount()) == buf.size(), ErrorKind::io,
                  "truncated PNM data in '" + path.string() + "'");
  return from_bytes(h, w, channels, buf.data());
}

inline void write_pnm(const std::filesystem::path& path, const Image& img) {
  std::vector<std::uint8_t> bytes = to_bytes(img);
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  detail::require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path.string() + "'");
}

}  // namespace detail

inline bool is_image_path(const std::filesystem::path& path) {
  const std::string ext = detail::lower_extension(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

// Format is sniffed from the file signature, not the extension.
inline Image read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  detail::require(static_cast<bool>(probe), ErrorKind::io, "cannot open '" + path.string() + "'");
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  const auto got = probe.gcount();
  probe.close();
  if (got == 8 && png_sig_cmp(sig, 0, 8) == 0) return detail::read_png(path);
  if (got >= 2 && sig[0] == 'P') return detail::read_pnm(path);
  detail::fail(ErrorKind::format, "unrecognized image format: '" + path.string() + "'");
}

// PNG for ".png", binary PGM/PPM for ".pgm"/".ppm"/".pnm".
inline void write_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = detail::lower_extension(path);
  if (ext == ".png") {
    detail::write_png(path, img);
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    detail::write_pnm(path, img);
  } else {
    detail::fail(ErrorKind::invalid_parameter, "write_image: unsupported extension '" + ext + "'");
  }
}

}  // namespace texrand
