#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "texrand/error.hpp"
#include "texrand/gtr.hpp"
#include "texrand/image_io.hpp"
#include "texrand/ltr.hpp"
#include "texrand/rng.hpp"
#include "texrand/tcps.hpp"

namespace texrand {

struct AugmentEntry {
  std::filesystem::path input;
  std::uint64_t seed = 0;  // child_seed(root_seed, file index)
  std::string painting;
  double lambda = 0.0;
  std::uint64_t mask_seed = 0;
  std::filesystem::path gtr_out, ltr_out, mask_out;
};

struct AugmentFailure {
  std::filesystem::path input;
  std::string reason;
};

struct AugmentManifest {
  std::uint64_t root_seed = 0;
  std::vector<AugmentEntry> entries;
  std::vector<AugmentFailure> failed;

  bool ok() const { return failed.empty(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["root_seed"] = root_seed;
    j["rng"] = kRngName;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : entries) {
      j["entries"].push_back({{"input", e.input.filename().string()},
                              {"seed", e.seed},
                              {"painting", e.painting},
                              {"lambda", e.lambda},
                              {"mask_seed", e.mask_seed},
                              {"gtr", e.gtr_out.filename().string()},
                              {"ltr", e.ltr_out.filename().string()},
                              {"mask", e.mask_out.filename().string()}});
    }
    j["failed"] = nlohmann::json::array();
    for (const auto& f : failed) j["failed"].push_back({{"input", f.input.filename().string()}, {"reason", f.reason}});
    return j;
  }
};

// For the i-th image of in_dir (filename order) the stream child_seed(root_seed, i)
// draws the painting, then the mask. Inputs that cannot be read or are too small
// for a mask are recorded in `failed` and skipped.
inline AugmentManifest augment_batch(const std::filesystem::path& in_dir, const std::vector<tcps::PaintingRecord>& pool,
                                     const gtr::CodecWeights& codec, const ltr::LtrConfig& cfg, std::uint64_t root_seed,
                                     const std::filesystem::path& out_dir) {
  cfg.validate();
  detail::require(!pool.empty(), ErrorKind::invalid_parameter, "augment: painting pool is empty");
  const auto inputs = tcps::list_images(in_dir);
  std::filesystem::create_directories(out_dir);

  AugmentManifest manifest;
  manifest.root_seed = root_seed;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& path = inputs[i];
    AugmentEntry entry;
    entry.input = path;
    entry.seed = child_seed(root_seed, i);
    RngStream rng(entry.seed);
    const auto& painting = tcps::sample_painting(pool, rng);
    ltr::LtrResult r;
    try {
      r = ltr::ltr_randomize_detailed(read_image(path), painting.image, codec, cfg, rng);
    } catch (const Error& e) {
      // Per-file problems (unreadable, undecodable, too small) skip the file.
      if (e.kind() != ErrorKind::io && e.kind() != ErrorKind::format && e.kind() != ErrorKind::invalid_shape) throw;
      manifest.failed.push_back({path, e.what()});
      continue;
    }

    const std::string stem = path.stem().string();
    entry.painting = painting.path.filename().string();
    entry.lambda = r.mask.lambda_used;
    entry.mask_seed = r.mask.seed;
    entry.gtr_out = out_dir / (stem + ".gtr.png");
    entry.ltr_out = out_dir / (stem + ".ltr.png");
    entry.mask_out = out_dir / (stem + ".mask.png");
    write_image(entry.gtr_out, r.gtr);
    write_image(entry.ltr_out, r.ltr);
    write_image(entry.mask_out, r.mask.to_image());
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

}  // namespace texrand
