#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "texrand/error.hpp"
#include "texrand/image_io.hpp"
#include "texrand/tcps.hpp"

// Painting pool manifest: a JSON array of {"path", "texture_complexity"}.
// Relative paths resolve against the manifest's directory.

namespace texrand::tcps {

inline nlohmann::json pool_to_json(const std::vector<PaintingRecord>& pool) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& rec : pool) {
    arr.push_back({{"path", rec.path.generic_string()}, {"texture_complexity", rec.texture_complexity}});
  }
  return arr;
}

inline void write_pool_manifest(const std::filesystem::path& path, const std::vector<PaintingRecord>& pool) {
  std::ofstream out(path);
  detail::require(static_cast<bool>(out), ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << pool_to_json(pool).dump(2) << '\n';
  detail::require(static_cast<bool>(out), ErrorKind::io, "failed writing '" + path.string() + "'");
}

// Loads the manifest and every painting it names. Complexities are taken from
// the manifest, not recomputed.
inline std::vector<PaintingRecord> read_pool_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open pool manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    detail::fail(ErrorKind::format, "malformed pool manifest '" + path.string() + "': " + e.what());
  }
  detail::require(doc.is_array(), ErrorKind::format, "pool manifest '" + path.string() + "' must be a JSON array");
  std::vector<PaintingRecord> pool;
  const auto base = path.parent_path();
  for (const auto& entry : doc) {
    detail::require(entry.is_object() && entry.contains("path") && entry["path"].is_string(), ErrorKind::format,
                    "pool manifest entries need a string 'path'");
    PaintingRecord rec;
    std::filesystem::path p = entry["path"].get<std::string>();
    rec.path = p.is_relative() ? base / p : p;
    rec.image = read_image(rec.path);
    rec.texture_complexity = entry.value("texture_complexity", 0.0);
    rec.accepted = true;
    pool.push_back(std::move(rec));
  }
  return pool;
}

}  // namespace texrand::tcps
