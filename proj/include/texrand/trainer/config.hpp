#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "texrand/error.hpp"
#include "texrand/ltr.hpp"

namespace texrand::trainer {

// Every training hyperparameter. Defaults are the full-scale recipe
// (SGD with momentum 0.9, weight decay 5e-4, lr 1e-5 with poly decay 0.9,
// batch 2, consistency weight 1e-5); toy-scale runs override lr0 and
// iterations.
struct TrainConfig {
  double beta = 1e-5;
  std::vector<double> class_weights;  // empty: uniform over num_classes
  double lr0 = 1e-5;
  double poly_power = 0.9;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int iterations = 200000;
  int batch_size = 2;
  std::uint64_t seed = 0;

  bool gtr = true;
  bool ltr = true;
  bool cgl = true;
  bool mirror = true;
  bool blur = true;
  double mirror_probability = 0.5;
  double blur_probability = 0.5;
  double blur_radius_max = 1.0;

  int num_classes = 4;
  int train_n = 500;
  std::uint64_t data_seed = 1;
  int log_every = 100;

  ltr::LtrConfig ltr_cfg;

  double class_weight(int c) const { return class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(c)]; }

  void validate() const {
    detail::require(beta >= 0.0 && beta <= 1.0, ErrorKind::invalid_parameter, "train: beta must lie in [0, 1]");
    detail::require(num_classes >= 2, ErrorKind::invalid_parameter, "train: num_classes must be >= 2");
    if (!class_weights.empty()) {
      detail::require(class_weights.size() == static_cast<std::size_t>(num_classes), ErrorKind::invalid_parameter,
                      "train: class_weights needs one entry per class");
      for (double w : class_weights)
        detail::require(w > 0.0, ErrorKind::invalid_parameter, "train: class weights must be positive");
    }
    detail::require(lr0 >= 0.0, ErrorKind::invalid_parameter, "train: lr0 must be non-negative");
    detail::require(iterations >= 1 && batch_size >= 1, ErrorKind::invalid_parameter,
                    "train: iterations and batch_size must be >= 1");
    detail::require(train_n >= 1, ErrorKind::invalid_parameter, "train: train_n must be >= 1");
    detail::require(log_every >= 1, ErrorKind::invalid_parameter, "train: log_every must be >= 1");
    ltr_cfg.validate();
  }
};

namespace config_text {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  texrand::detail::fail(ErrorKind::invalid_parameter, "config: '" + key + "' expects a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  texrand::detail::require(used == v.size() && !v.empty(), ErrorKind::invalid_parameter,
          "config: '" + key + "' expects a number, got '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  texrand::detail::require(used == v.size() && !v.empty(), ErrorKind::invalid_parameter,
          "config: '" + key + "' expects an integer, got '" + v + "'");
  return n;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  texrand::detail::require(used == v.size() && !v.empty() && v[0] != '-', ErrorKind::invalid_parameter,
          "config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  return n;
}

}  // namespace config_text

// Applies one key=value setting; unknown keys are errors.
inline void apply_setting(TrainConfig& cfg, const std::string& key, const std::string& value) {
  using namespace config_text;
  const std::string& v = value;
  if (key == "beta") cfg.beta = parse_double(key, v);
  else if (key == "class_weights") {
    cfg.class_weights.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.class_weights.push_back(parse_double(key, trim(item)));
  }
  else if (key == "lr0") cfg.lr0 = parse_double(key, v);
  else if (key == "poly_power") cfg.poly_power = parse_double(key, v);
  else if (key == "momentum") cfg.momentum = parse_double(key, v);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, v);
  else if (key == "iterations") cfg.iterations = static_cast<int>(parse_int(key, v));
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, v));
  else if (key == "seed") cfg.seed = parse_u64(key, v);
  else if (key == "gtr") cfg.gtr = parse_bool(key, v);
  else if (key == "ltr") cfg.ltr = parse_bool(key, v);
  else if (key == "cgl") cfg.cgl = parse_bool(key, v);
  else if (key == "mirror") cfg.mirror = parse_bool(key, v);
  else if (key == "blur") cfg.blur = parse_bool(key, v);
  else if (key == "mirror_probability") cfg.mirror_probability = parse_double(key, v);
  else if (key == "blur_probability") cfg.blur_probability = parse_double(key, v);
  else if (key == "blur_radius_max") cfg.blur_radius_max = parse_double(key, v);
  else if (key == "num_classes") cfg.num_classes = static_cast<int>(parse_int(key, v));
  else if (key == "train_n") cfg.train_n = static_cast<int>(parse_int(key, v));
  else if (key == "data_seed") cfg.data_seed = parse_u64(key, v);
  else if (key == "log_every") cfg.log_every = static_cast<int>(parse_int(key, v));
  else if (key == "lambda_min") cfg.ltr_cfg.lambda_min = parse_double(key, v);
  else if (key == "lambda_max") cfg.ltr_cfg.lambda_max = parse_double(key, v);
  else if (key == "p") cfg.ltr_cfg.p = parse_double(key, v);
  else if (key == "log_base") cfg.ltr_cfg.log_base = parse_double(key, v);
  else if (key == "kernel_radius") cfg.ltr_cfg.kernel_radius = static_cast<int>(parse_int(key, v));
  else texrand::detail::fail(ErrorKind::invalid_parameter, "config: unknown key '" + key + "'");
}

// Flat key=value text; '#' starts a comment.
inline void apply_config_text(TrainConfig& cfg, const std::string& text) {
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = config_text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    detail::require(eq != std::string::npos, ErrorKind::invalid_parameter,
                    "config line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(cfg, config_text::trim(line.substr(0, eq)), config_text::trim(line.substr(eq + 1)));
  }
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream in(path);
  detail::require(static_cast<bool>(in), ErrorKind::io, "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(base, ss.str());
  return base;
}

}  // namespace texrand::trainer
