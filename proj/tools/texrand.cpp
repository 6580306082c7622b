// texrand command-line front end.
//
// Every subcommand reads one root seed (--seed, default 0) and seeds its single
// random stream from it; batch commands derive per-item streams with
// child_seed(root, index). With --json exactly one JSON object is written to
// stdout, including on failure; progress goes to stderr unless --quiet.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "texrand/texrand.hpp"

using nlohmann::json;
using namespace texrand;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool quiet = false;
  bool json = false;
};

struct Output {
  json doc = json::object();
  std::vector<std::string> lines;  // human-readable stdout
  int exit_code = exit_code::ok;

  void line(const std::string& s) { lines.push_back(s); }
};

[[noreturn]] void usage_error(const std::string& msg) { throw CLI::ValidationError(msg); }

std::pair<double, double> parse_pair(const std::string& text, char sep, const std::string& flag) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) usage_error(flag + ": expected a" + sep + "b, got '" + text + "'");
  try {
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, pos), b = text.substr(pos + 1);
    const double x = std::stod(a, &used_a), y = std::stod(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument(text);
    return {x, y};
  } catch (const std::logic_error&) {
    usage_error(flag + ": cannot parse '" + text + "'");
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

gtr::CodecWeights load_codec(const std::string& backend, const std::string& weights) {
  const gtr::Backend b = gtr::parse_backend(backend);
  if (b == gtr::Backend::identity) {
    if (!weights.empty()) usage_error("--weights is only meaningful with --backend conv");
    return gtr::CodecWeights::identity();
  }
  if (weights.empty()) usage_error("--backend conv needs --weights (see gtr --init-weights)");
  return gtr::CodecWeights::load(weights);
}

void progress(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

json iou_json(const trainer::IouResult& r) {
  json per = json::array();
  for (const auto& v : r.per_class) per.push_back(v ? json(*v) : json(nullptr));
  return {{"per_class", per}, {"miou", r.mean}};
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  Output out;
  CLI::App app{"texrand: texture randomisation toolkit"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Root random seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");
  app.add_flag("--json", g.json, "Print one JSON object on stdout");

  std::function<void()> action;

  // tcps ---------------------------------------------------------------
  auto* tcps_cmd = app.add_subcommand("tcps", "Texture-complexity painting selection");
  tcps_cmd->require_subcommand(1);

  std::string score_image;
  double score_eps = 20.0;
  auto* score = tcps_cmd->add_subcommand("score", "Texture complexity of one image");
  score->add_option("image", score_image, "Image file")->required();
  score->add_option("--epsilon", score_eps, "Gradient threshold on byte luma")->capture_default_str();
  score->callback([&] {
    action = [&] {
      const double t = tcps::texture_complexity(read_image(score_image), score_eps);
      out.doc = {{"command", "tcps score"}, {"image", score_image}, {"epsilon", score_eps}, {"texture_complexity", t}};
      out.line(fmt("%.4f", t));
    };
  });

  std::string sel_dir, sel_band = "0.55:0.65", sel_out;
  tcps::SelectionConfig sel_cfg;
  auto* select = tcps_cmd->add_subcommand("select", "Select K paintings whose complexity lies in a band");
  select->add_option("--dir", sel_dir, "Directory of candidate paintings")->required();
  select->add_option("--k", sel_cfg.k, "Pool size")->capture_default_str();
  select->add_option("--band", sel_band, "Complexity band min:max")->capture_default_str();
  select->add_option("--epsilon", sel_cfg.epsilon, "Gradient threshold")->capture_default_str();
  select->add_option("--out", sel_out, "Pool manifest (JSON)")->required();
  select->callback([&] {
    action = [&] {
      std::tie(sel_cfg.band_min, sel_cfg.band_max) = parse_pair(sel_band, ':', "--band");
      sel_cfg.seed = g.seed;
      sel_cfg.validate();
      const auto scored = tcps::score_directory(sel_dir, sel_cfg);
      std::size_t in_band = 0;
      for (const auto& r : scored) in_band += r.accepted;
      auto pool = tcps::select_from(scored, sel_cfg);
      // Stored paths are relative to the manifest when possible.
      const fs::path base = fs::absolute(sel_out).parent_path();
      for (auto& r : pool) r.path = fs::absolute(r.path).lexically_relative(base);
      tcps::write_pool_manifest(sel_out, pool);
      out.doc = {{"command", "tcps select"}, {"candidates", scored.size()}, {"in_band", in_band},
                 {"selected", pool.size()}, {"seed", g.seed}, {"out", sel_out}, {"pool", tcps::pool_to_json(pool)}};
      out.line("scored " + std::to_string(scored.size()) + ", in band " + std::to_string(in_band) + ", selected " +
               std::to_string(pool.size()) + " -> " + sel_out);
    };
  });

  // gtr ----------------------------------------------------------------
  std::string gtr_content, gtr_style, gtr_out, gtr_backend = "identity", gtr_weights, gtr_init;
  auto* gtr_cmd = app.add_subcommand("gtr", "Global texture randomisation of one image");
  gtr_cmd->add_option("--content", gtr_content, "Source image");
  gtr_cmd->add_option("--style", gtr_style, "Painting");
  gtr_cmd->add_option("--out", gtr_out, "Output image");
  gtr_cmd->add_option("--backend", gtr_backend, "identity or conv")->capture_default_str();
  gtr_cmd->add_option("--weights", gtr_weights, "Conv codec weights (TXRW)");
  gtr_cmd->add_option("--init-weights", gtr_init, "Write He-initialised conv weights from --seed to this path");
  gtr_cmd->callback([&] {
    action = [&] {
      out.doc = {{"command", "gtr"}};
      if (!gtr_init.empty()) {
        gtr::CodecWeights::random_conv(g.seed).save(gtr_init);
        out.doc["init_weights"] = gtr_init;
        out.line("wrote conv weights -> " + gtr_init);
        if (gtr_content.empty() && gtr_style.empty() && gtr_out.empty()) return;
      }
      if (gtr_content.empty() || gtr_style.empty() || gtr_out.empty())
        usage_error("gtr needs --content, --style and --out");
      const auto codec = load_codec(gtr_backend, gtr_weights);
      write_image(gtr_out, gtr::gtr_stylize(read_image(gtr_content), read_image(gtr_style), codec));
      out.doc.update({{"content", gtr_content}, {"style", gtr_style}, {"backend", gtr_backend}, {"out", gtr_out}});
      out.line("stylised -> " + gtr_out);
    };
  });

  // ltr ----------------------------------------------------------------
  auto* ltr_cmd = app.add_subcommand("ltr", "Local texture randomisation");
  ltr_cmd->require_subcommand(1);

  std::string mask_size, mask_range, mask_out;
  std::optional<double> mask_lambda;
  ltr::LtrConfig mask_cfg;
  auto* mask = ltr_cmd->add_subcommand("mask", "Random binary mask (PNG, 0/255)");
  mask->add_option("--size", mask_size, "WxH")->required();
  auto* lam = mask->add_option("--lambda", mask_lambda, "Fixed lambda");
  mask->add_option("--lambda-range", mask_range, "lambda_min:lambda_max (default 4:16)")->excludes(lam);
  mask->add_option("--p", mask_cfg.p, "Fraction of white pixels")->capture_default_str();
  mask->add_option("--log-base", mask_cfg.log_base, "Base of the log in gamma = exp(log_b(lambda))")
      ->capture_default_str();
  mask->add_option("--kernel-radius", mask_cfg.kernel_radius, "Gaussian radius (0: ceil(3 gamma))")
      ->capture_default_str();
  mask->add_option("--out", mask_out, "Output PNG")->required();
  mask->callback([&] {
    action = [&] {
      const auto [w, h] = parse_pair(mask_size, 'x', "--size");
      if (w != std::floor(w) || h != std::floor(h) || w < 1 || h < 1) usage_error("--size: expected integer WxH");
      if (mask_lambda) mask_cfg.lambda_min = mask_cfg.lambda_max = *mask_lambda;
      if (!mask_range.empty()) std::tie(mask_cfg.lambda_min, mask_cfg.lambda_max) = parse_pair(mask_range, ':', "--lambda-range");
      RngStream rng(g.seed);
      const ltr::Mask m = ltr::generate_mask(static_cast<int>(h), static_cast<int>(w), mask_cfg, rng);
      write_image(mask_out, convert_range(m.to_image(), Range::byte));
      out.doc = {{"command", "ltr mask"}, {"width", m.width}, {"height", m.height}, {"lambda", m.lambda_used},
                 {"p", m.p}, {"noise_seed", m.seed}, {"white_fraction", m.white_fraction()}, {"out", mask_out}};
      out.line("lambda " + fmt("%.4f", m.lambda_used) + ", white fraction " + fmt("%.4f", m.white_fraction()) + " -> " +
               mask_out);
    };
  });

  std::string apply_content, apply_stylized, apply_mask, apply_out;
  auto* apply = ltr_cmd->add_subcommand("apply", "Mix source and stylised images through a mask");
  apply->add_option("--content", apply_content, "Source image")->required();
  apply->add_option("--stylized", apply_stylized, "Stylised image")->required();
  apply->add_option("--mask", apply_mask, "Mask PNG (white takes the stylised pixel)")->required();
  apply->add_option("--out", apply_out, "Output image")->required();
  apply->callback([&] {
    action = [&] {
      const Image x = convert_range(to_rgb(read_image(apply_content)), Range::unit);
      const Image s = convert_range(to_rgb(read_image(apply_stylized)), Range::unit);
      const ltr::Mask m = ltr::Mask::from_image(read_image(apply_mask));
      write_image(apply_out, ltr::mix(x, s, m));
      out.doc = {{"command", "ltr apply"}, {"white_fraction", m.white_fraction()}, {"out", apply_out}};
      out.line("mixed -> " + apply_out);
    };
  });

  // dataset ------------------------------------------------------------
  auto* ds_cmd = app.add_subcommand("dataset", "Write procedural data");
  ds_cmd->require_subcommand(1);

  std::string toy_domain = "source", toy_out;
  int toy_n = 10;
  auto* toy = ds_cmd->add_subcommand("toy", "Toy segmentation samples: NNNN.png and NNNN.label.png (class ids)");
  toy->add_option("--domain", toy_domain, "source or target")->capture_default_str();
  toy->add_option("--n", toy_n, "Sample count")->capture_default_str();
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy->callback([&] {
    action = [&] {
      const auto data = trainer::gen_toy_dataset(trainer::parse_domain(toy_domain), toy_n, g.seed);
      fs::create_directories(toy_out);
      for (std::size_t i = 0; i < data.size(); ++i) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04zu", i);
        write_image(fs::path(toy_out) / (std::string(stem) + ".png"), data[i].image);
        const auto& lbl = data[i].label;
        std::vector<double> ids(lbl.labels.begin(), lbl.labels.end());
        write_image(fs::path(toy_out) / (std::string(stem) + ".label.png"),
                    Image(lbl.height, lbl.width, 1, Range::byte, ids));
      }
      out.doc = {{"command", "dataset toy"}, {"domain", toy_domain}, {"n", toy_n}, {"seed", g.seed}, {"out", toy_out}};
      out.line("wrote " + std::to_string(toy_n) + " " + toy_domain + " samples -> " + toy_out);
    };
  });

  std::string paint_out;
  int paint_n = 200, paint_size = 96;
  auto* paint = ds_cmd->add_subcommand("paintings", "Procedural painting candidates for tcps select");
  paint->add_option("--n", paint_n, "Candidate count")->capture_default_str();
  paint->add_option("--size", paint_size, "Side length in pixels")->capture_default_str();
  paint->add_option("--out", paint_out, "Output directory")->required();
  paint->callback([&] {
    action = [&] {
      if (paint_n < 1 || paint_size < 8) usage_error("paintings: need --n >= 1 and --size >= 8");
      const auto files = write_painting_candidates(paint_out, paint_n, g.seed, paint_size);
      out.doc = {{"command", "dataset paintings"}, {"n", files.size()}, {"size", paint_size}, {"seed", g.seed},
                 {"out", paint_out}};
      out.line("wrote " + std::to_string(files.size()) + " paintings -> " + paint_out);
    };
  });

  // train --------------------------------------------------------------
  std::string tr_config, tr_pool, tr_out, tr_log, tr_backend = "identity", tr_weights;
  std::vector<std::string> tr_set;
  std::optional<int> tr_iterations;
  std::optional<double> tr_lr0, tr_beta;
  auto* train_cmd = app.add_subcommand("train", "Train the toy segmentation model on source-domain data");
  train_cmd->add_option("--config", tr_config, "key=value config file");
  train_cmd->add_option("--pool", tr_pool, "Pool manifest from tcps select (needed when gtr or ltr is on)");
  train_cmd->add_option("--out", tr_out, "Model file (TXRW)")->required();
  train_cmd->add_option("--log", tr_log, "CSV log iter,lr,l_seg,l_con");
  train_cmd->add_option("--iterations", tr_iterations, "Overrides the config");
  train_cmd->add_option("--lr0", tr_lr0, "Overrides the config");
  train_cmd->add_option("--beta", tr_beta, "Overrides the config");
  train_cmd->add_option("--set", tr_set, "key=value override, repeatable");
  train_cmd->add_option("--backend", tr_backend, "GTR codec: identity or conv")->capture_default_str();
  train_cmd->add_option("--weights", tr_weights, "Conv codec weights");
  train_cmd->callback([&] {
    action = [&] {
      trainer::TrainConfig cfg = tr_config.empty() ? trainer::TrainConfig{} : trainer::load_config(tr_config);
      for (const auto& kv : tr_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) usage_error("--set: expected key=value, got '" + kv + "'");
        trainer::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (tr_iterations) cfg.iterations = *tr_iterations;
      if (tr_lr0) cfg.lr0 = *tr_lr0;
      if (tr_beta) cfg.beta = *tr_beta;
      if (g.seed_given) cfg.seed = g.seed;
      cfg.validate();
      std::vector<tcps::PaintingRecord> pool;
      if (cfg.gtr || cfg.ltr) {
        if (tr_pool.empty()) usage_error("train: --pool is required when gtr or ltr is enabled");
        pool = tcps::read_pool_manifest(tr_pool);
      }
      const auto codec = load_codec(tr_backend, tr_weights);
      const auto data = trainer::gen_toy_dataset(trainer::Domain::source, cfg.train_n, cfg.data_seed);
      progress(g, "training " + std::to_string(cfg.iterations) + " iterations on " + std::to_string(data.size()) +
                      " samples");
      const auto result = trainer::train(cfg, pool, data, codec, [&](const trainer::LogEntry& e) {
        progress(g, "iter " + std::to_string(e.iteration) + "  lr " + fmt("%.3e", e.lr) + "  l_seg " +
                        fmt("%.4f", e.l_seg) + "  l_con " + fmt("%.4f", e.l_con));
      });
      result.model.save(tr_out);
      if (!tr_log.empty()) trainer::write_log_csv(tr_log, result.log);
      const auto& last = result.log.back();
      out.doc = {{"command", "train"}, {"iterations", cfg.iterations}, {"seed", cfg.seed}, {"model", tr_out},
                 {"final", {{"iter", last.iteration}, {"lr", last.lr}, {"l_seg", last.l_seg}, {"l_con", last.l_con}}}};
      if (!tr_log.empty()) out.doc["log"] = tr_log;
      out.line("final l_seg " + fmt("%.4f", last.l_seg) + " -> " + tr_out);
    };
  });

  // eval ---------------------------------------------------------------
  std::string ev_model, ev_domain = "target";
  int ev_n = 200;
  auto* eval_cmd = app.add_subcommand("eval", "Per-class IoU and mIoU on freshly generated toy data");
  eval_cmd->add_option("--model", ev_model, "Model file")->required();
  eval_cmd->add_option("--dataset", ev_domain, "source or target")->capture_default_str();
  eval_cmd->add_option("--n", ev_n, "Sample count")->capture_default_str();
  eval_cmd->callback([&] {
    action = [&] {
      const auto model = trainer::SegModel::load(ev_model);
      const auto data = trainer::gen_toy_dataset(trainer::parse_domain(ev_domain), ev_n, g.seed);
      const auto r = trainer::evaluate(model, data);
      out.doc = {{"command", "eval"}, {"dataset", ev_domain}, {"n", ev_n}, {"seed", g.seed}};
      out.doc.update(iou_json(r));
      static const char* names[] = {"background", "circle", "rectangle", "triangle"};
      for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        const std::string name = c < 4 && model.num_classes() == 4 ? names[c] : "class " + std::to_string(c);
        out.line(name + " " + (r.per_class[c] ? fmt("%.4f", *r.per_class[c]) : std::string("n/a")));
      }
      out.line("mIoU " + fmt("%.4f", r.mean));
    };
  });

  // augment ------------------------------------------------------------
  std::string au_in, au_pool, au_out, au_backend = "identity", au_weights, au_range;
  ltr::LtrConfig au_cfg;
  auto* aug_cmd = app.add_subcommand("augment", "Write GTR, LTR and mask images for every image in a directory");
  aug_cmd->add_option("--in", au_in, "Input directory")->required();
  aug_cmd->add_option("--pool", au_pool, "Pool manifest")->required();
  aug_cmd->add_option("--out", au_out, "Output directory (manifest.json goes here)")->required();
  aug_cmd->add_option("--backend", au_backend, "identity or conv")->capture_default_str();
  aug_cmd->add_option("--weights", au_weights, "Conv codec weights");
  aug_cmd->add_option("--lambda-range", au_range, "lambda_min:lambda_max (default 4:16)");
  aug_cmd->add_option("--p", au_cfg.p, "Fraction of stylised pixels")->capture_default_str();
  aug_cmd->callback([&] {
    action = [&] {
      if (!au_range.empty()) std::tie(au_cfg.lambda_min, au_cfg.lambda_max) = parse_pair(au_range, ':', "--lambda-range");
      const auto codec = load_codec(au_backend, au_weights);
      const auto pool = tcps::read_pool_manifest(au_pool);
      const auto manifest = augment_batch(au_in, pool, codec, au_cfg, g.seed, au_out);
      const fs::path manifest_path = fs::path(au_out) / "manifest.json";
      std::ofstream(manifest_path) << manifest.to_json().dump(2) << '\n';
      out.doc = manifest.to_json();
      out.doc["command"] = "augment";
      out.doc["manifest"] = manifest_path.string();
      out.line("augmented " + std::to_string(manifest.entries.size()) + " images -> " + au_out);
      for (const auto& f : manifest.failed) out.line("failed: " + f.input.string() + ": " + f.reason);
      if (!manifest.ok()) out.exit_code = exit_code::io;
    };
  });

  auto emit_error = [&](int code, const std::string& kind, const std::string& msg) {
    if (g.json) {
      std::cout << json{{"error", {{"kind", kind}, {"message", msg}}}, {"exit_code", code}}.dump() << '\n';
    } else {
      std::cerr << "texrand: " << msg << '\n';
    }
    return code;
  };

  for (int i = 1; i < argc; ++i) g.json |= std::string(argv[i]) == "--json";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    if (g.json) {
      std::cout << json{{"help", app.help()}}.dump() << '\n';
    } else {
      std::cout << app.help();
    }
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    return emit_error(exit_code::usage, "usage", e.what());
  }

  try {
    action();
  } catch (const CLI::ValidationError& e) {
    return emit_error(exit_code::usage, "usage", e.what());
  } catch (const Error& e) {
    return emit_error(exit_code_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return emit_error(exit_code::io, "io", e.what());
  }

  if (g.json) {
    out.doc["exit_code"] = out.exit_code;
    std::cout << out.doc.dump() << '\n';
  } else {
    for (const auto& l : out.lines) std::cout << l << '\n';
  }
  return out.exit_code;
}
