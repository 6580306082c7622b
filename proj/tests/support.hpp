#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "texrand/image.hpp"
#include "texrand/rng.hpp"

namespace testing_support {

inline texrand::Image random_image(int h, int w, int c, std::uint64_t seed,
                                   texrand::Range range = texrand::Range::unit) {
  texrand::RngStream rng(seed);
  texrand::Image img(h, w, c, range);
  for (double& v : img.data()) v = rng.uniform() * texrand::range_max(range);
  return img;
}

inline oracle::Raster to_raster(const texrand::Image& img) {
  return {img.height(), img.width(), img.channels(), {img.data().begin(), img.data().end()}};
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("texrand_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
