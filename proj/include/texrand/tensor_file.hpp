#pragma once

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include "texrand/error.hpp"

// "TXRW" tensor container shared by codec weights and segmentation models.
//
//   magic    4 bytes  "TXRW"
//   version  u32      kTensorFileVersion
//   count    u32      number of tensors
//   per tensor:
//     name_len u32, name bytes (UTF-8, no terminator)
//     rank     u32, dims u32 x rank
//     values   f64 x prod(dims), little-endian IEEE-754
//     crc32    u32 over every byte of this record from name_len through values
//
// All integers are little-endian.

namespace texrand {

inline constexpr std::uint32_t kTensorFileVersion = 1;

struct Tensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::size_t offset() const { return pos_; }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t crc(std::size_t from, std::size_t to) const {
    return static_cast<std::uint32_t>(
        ::crc32(0L, bytes_.data() + from, static_cast<uInt>(to - from)));
  }

 private:
  void need(std::size_t n) const {
    detail::require(pos_ + n <= bytes_.size(), ErrorKind::format, "truncated tensor file '" + source_ + "'");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensors(const std::vector<Tensor>& tensors) {
  detail::ByteWriter w;
  w.raw("TXRW", 4);
  w.u32(kTensorFileVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    detail::require(t.values.size() == t.element_count(), ErrorKind::invalid_shape,
                    "tensor '" + t.name + "': value count does not match dims");
    const std::size_t start = w.bytes().size();
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.raw(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) w.u32(d);
    for (double v : t.values) w.f64(v);
    const auto& b = w.bytes();
    w.u32(static_cast<std::uint32_t>(::crc32(0L, b.data() + start, static_cast<uInt>(b.size() - start))));
  }
  return std::move(w.bytes());
}

inline std::vector<Tensor> decode_tensors(const std::vector<std::uint8_t>& bytes,
                                          const std::string& source = "<memory>") {
  detail::ByteReader r(bytes, source);
  detail::require(r.str(4) == "TXRW", ErrorKind::format, "'" + source + "' lacks the TXRW magic");
  const std::uint32_t version = r.u32();
  detail::require(version == kTensorFileVersion, ErrorKind::format,
                  "'" + source + "': unsupported TXRW version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<Tensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.offset();
    Tensor t;
    t.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    detail::require(rank <= 8, ErrorKind::format, "'" + source + "': implausible tensor rank");
    for (std::uint32_t d = 0; d < rank; ++d) t.dims.push_back(r.u32());
    const std::size_t n = t.element_count();
    detail::require(n <= bytes.size() / 8, ErrorKind::format, "'" + source + "': tensor larger than file");
    t.values.resize(n);
    for (double& v : t.values) v = r.f64();
    const std::uint32_t expected = r.crc(start, r.offset());
    detail::require(r.u32() == expected, ErrorKind::format,
                    "'" + source + "': checksum mismatch in tensor '" + t.name + "'");
    tensors.push_back(std::move(t));
  }
  detail::require(r.offset() == bytes.size(), ErrorKind::format, "'" + source + "': trailing bytes");
  return tensors;
}

inline void save_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  const auto bytes = encode_tensors(tensors);
  std::ofstream out(path, std::ios::binary);
  detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  detail::require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path.string() + "'");
}

inline std::vector<Tensor> load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes, path.string());
}

inline const Tensor& find_tensor(const std::vector<Tensor>& tensors, const std::string& name) {
  for (const Tensor& t : tensors)
    if (t.name == name) return t;
  detail::fail(ErrorKind::format, "missing tensor '" + name + "'");
}

}  // namespace texrand
