#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "support.hpp"
#include "texrand/nn.hpp"
#include "texrand/trainer/config.hpp"
#include "texrand/trainer/losses.hpp"
#include "texrand/trainer/metrics.hpp"
#include "texrand/trainer/seg_model.hpp"
#include "texrand/trainer/sgd.hpp"
#include "texrand/trainer/toy_dataset.hpp"
#include "texrand/trainer/train.hpp"

using namespace texrand;
using namespace texrand::trainer;
using testing_support::random_image;
using testing_support::to_raster;

namespace {

FeatureMap random_features(int h, int w, int c, std::uint64_t seed) {
  RngStream rng(seed);
  FeatureMap f(h, w, c);
  for (double& v : f.data) v = 2.0 * rng.normal();
  return f;
}

LabelMap random_labels(int h, int w, int classes, std::uint64_t seed) {
  RngStream rng(seed);
  LabelMap m(h, w);
  for (auto& y : m.labels) y = static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(classes)));
  return m;
}

oracle::Raster oracle_forward(const SegModel& model, const Image& img) {
  oracle::Raster x = to_raster(img);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    x = oracle::conv_same(x, l.weight, l.bias, l.kernel, l.out_channels);
    if (i + 1 < model.layers.size()) oracle::relu(x);
  }
  return x;
}

TrainConfig quiet_config() {
  TrainConfig cfg;
  cfg.gtr = cfg.ltr = cfg.cgl = cfg.mirror = cfg.blur = false;
  cfg.lr0 = 0.01;
  cfg.log_every = 100;
  return cfg;
}

}  // namespace

TEST(SegModel, ArchitectureAndParameterCount) {
  const SegModel m = SegModel::standard(4);
  ASSERT_EQ(m.layers.size(), 3u);
  EXPECT_EQ(m.layers[0].kernel, 3);
  EXPECT_EQ(m.layers[1].kernel, 3);
  EXPECT_EQ(m.layers[2].kernel, 1);
  EXPECT_EQ(m.parameter_count(), (3u * 3 * 3 * 16 + 16) + (3u * 3 * 16 * 32 + 32) + (32u * 4 + 4));
  EXPECT_THROW(SegModel::standard(1), Error);
  EXPECT_THROW(SegModel::custom({2}, {3, 4}), Error);
}

TEST(SegModel, ZeroWeightsGiveFinalBias) {
  SegModel m = SegModel::standard(4);
  m.layers[2].bias = {0.1, -0.2, 0.3, 0.4};
  const FeatureMap z = forward(m, random_image(10, 12, 3, 1));
  EXPECT_EQ(z.height, 10);
  EXPECT_EQ(z.width, 12);
  for (std::size_t p = 0; p < z.pixels(); ++p)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(z.data[p * 4 + c], m.layers[2].bias[c]);
}

TEST(SegModel, LastLayerLinearity) {
  SegModel m = SegModel::standard(3);
  m.init(5);
  m.layers[2].bias = {0.5, -1.0, 2.0};
  const Image x = random_image(8, 8, 3, 2);
  const FeatureMap a = forward(m, x);
  for (double& w : m.layers[2].weight) w *= 2.0;
  const FeatureMap b = forward(m, x);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double bias = m.layers[2].bias[i % 3];
    EXPECT_NEAR(b.data[i] - bias, 2.0 * (a.data[i] - bias), 1e-12);
  }
}

TEST(SegModel, ForwardMatchesNaiveOracle) {
  SegModel m = SegModel::standard(4);
  m.init(7);
  for (auto& l : m.layers)
    for (double& b : l.bias) b = 0.01;
  // 13x9 fits one GEMM block; 29x23 spans several plus a ragged tail.
  for (const auto& [h, w] : {std::pair{13, 9}, std::pair{29, 23}}) {
    const Image x = random_image(h, w, 3, 3);
    const FeatureMap z = forward(m, x);
    const auto o = oracle_forward(m, x);
    ASSERT_EQ(z.size(), o.v.size());
    for (std::size_t i = 0; i < o.v.size(); ++i) EXPECT_NEAR(z.data[i], o.v[i], 1e-8);
  }
  EXPECT_THROW(forward(m, Image(4, 4, 1)), Error);
}

TEST(SegModel, SaveLoadRoundTrip) {
  testing_support::TempDir dir("model");
  SegModel m = SegModel::standard(4);
  m.init(3);
  m.save(dir / "m.bin");
  const SegModel back = SegModel::load(dir / "m.bin");
  ASSERT_EQ(back.layers.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(back.layers[l].weight, m.layers[l].weight);
    EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
  }
}

TEST(Conv, InputGradientMatchesFiniteDifferences) {
  nn::Conv2d layer(3, 2, 3, 2);
  RngStream rng(4);
  layer.init_he(rng);
  FeatureMap in = random_features(7, 6, 2, 5);
  const FeatureMap r = random_features(layer.out_size(7), layer.out_size(6), 3, 6);
  auto f = [&] {
    const FeatureMap out = nn::conv_forward(layer, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
    return s;
  };
  nn::Conv2dGrad g(layer);
  FeatureMap din(7, 6, 2);
  nn::conv_backward(layer, in, r, g, &din);
  EXPECT_TRUE(gradcheck::check_vector(in.data, din.data, f, 1e-6).ok);
  EXPECT_TRUE(gradcheck::check_vector(layer.weight, g.weight, f, 1e-6).ok);
  EXPECT_TRUE(gradcheck::check_vector(layer.bias, g.bias, f, 1e-6).ok);
}

TEST(Conv, GradientsSpanningSeveralBlocks) {
  nn::Conv2d layer(3, 2, 2);
  RngStream rng(8);
  layer.init_he(rng);
  FeatureMap in = random_features(19, 17, 2, 9);  // 323 output pixels
  const FeatureMap r = random_features(19, 17, 2, 10);
  auto f = [&] {
    const FeatureMap out = nn::conv_forward(layer, in);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * r.data[i];
    return s;
  };
  nn::Conv2dGrad g(layer);
  FeatureMap din(19, 17, 2);
  nn::conv_backward(layer, in, r, g, &din);
  EXPECT_TRUE(gradcheck::check_vector(in.data, din.data, f, 1e-6).ok);
  EXPECT_TRUE(gradcheck::check_vector(layer.weight, g.weight, f, 1e-6).ok);
  EXPECT_TRUE(gradcheck::check_vector(layer.bias, g.bias, f, 1e-6).ok);
}

TEST(Softmax, SumsToOne) {
  const FeatureMap p = softmax(random_features(6, 5, 4, 8));
  for (std::size_t i = 0; i < p.pixels(); ++i) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += p.data[i * 4 + c];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  FeatureMap big(1, 1, 2);
  big.data = {1000.0, -1000.0};
  EXPECT_NEAR(softmax(big).data[0], 1.0, 1e-15);
}

TEST(WeightedCe, ClosedForms) {
  const FeatureMap uniform(3, 3, 5);
  const LabelMap lbl = random_labels(3, 3, 5, 1);
  EXPECT_NEAR(weighted_ce(uniform, lbl, {}).loss, std::log(5.0), 1e-12);
  FeatureMap margin(1, 2, 3);
  margin.data = {500.0, 0.0, 0.0, 0.0, 0.0, 500.0};
  LabelMap y(1, 2);
  y.labels = {0, 2};
  EXPECT_NEAR(weighted_ce(margin, y, {}).loss, 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(weighted_ce(margin, LabelMap(1, 2, 1), {}).loss));
}

TEST(WeightedCe, MatchesDirectOracle) {
  const FeatureMap z = random_features(4, 5, 3, 9);
  const LabelMap y = random_labels(4, 5, 3, 10);
  const std::vector<double> w = {0.5, 2.0, 1.25};
  EXPECT_NEAR(weighted_ce(z, y, w).loss, oracle::weighted_ce(z.data, y.labels, 3, w), 1e-12);
}

TEST(WeightedCe, GradientMatchesFiniteDifferences) {
  FeatureMap z = random_features(2, 2, 3, 11);
  const LabelMap y = random_labels(2, 2, 3, 12);
  const std::vector<double> w = {0.7, 1.3, 2.0};
  const LossGrad lg = weighted_ce(z, y, w);
  auto f = [&] { return weighted_ce(z, y, w).loss; };
  EXPECT_TRUE(gradcheck::check_vector(z.data, lg.grad.data, f, 1e-4).ok);
}

TEST(Cgl, ClosedFormsAndGradient) {
  const FeatureMap a = random_features(3, 3, 4, 13);
  EXPECT_EQ(cgl_loss(a, a).loss, 0.0);
  for (double g : cgl_loss(a, a).grad_a.data) EXPECT_EQ(g, 0.0);
  FeatureMap b = a;
  for (double& v : b.data) v += 0.75;
  EXPECT_NEAR(cgl_loss(b, a).loss, 0.75, 1e-12);

  FeatureMap p = random_features(3, 3, 4, 14), q = random_features(3, 3, 4, 15);
  EXPECT_NEAR(cgl_loss(p, q).loss, oracle::mean_abs_diff(p.data, q.data), 1e-15);
  const PairLossGrad g = cgl_loss(p, q);
  auto f = [&] { return cgl_loss(p, q).loss; };
  EXPECT_TRUE(gradcheck::check_vector(p.data, g.grad_a.data, f, 1e-4).ok);
  EXPECT_TRUE(gradcheck::check_vector(q.data, g.grad_b.data, f, 1e-4).ok);
  EXPECT_THROW(cgl_loss(p, FeatureMap(3, 3, 2)), Error);
}

TEST(TotalLoss, BetaExtremes) {
  SegModel m = SegModel::custom({3, 1}, {3, 4, 3});
  m.init(16);
  const auto inst = gradcheck::random_instance(8, 3, 17);
  TrainConfig cfg;
  cfg.beta = 0.0;
  const TotalLoss t0 = total_loss(m, inst.streams, inst.label, cfg);
  double seg = 0.0;
  for (const Image* img : {&inst.streams.raw, &*inst.streams.gtr, &*inst.streams.ltr})
    seg += oracle::weighted_ce(forward(m, *img).data, inst.label.labels, 3, {1, 1, 1});
  EXPECT_NEAR(t0.loss, seg, 1e-12);
  cfg.beta = 1.0;
  const TotalLoss t1 = total_loss(m, inst.streams, inst.label, cfg);
  EXPECT_NEAR(t1.loss, oracle::mean_abs_diff(forward(m, *inst.streams.gtr).data, forward(m, *inst.streams.ltr).data),
              1e-12);
  cfg.cgl = false;
  EXPECT_NEAR(total_loss(m, inst.streams, inst.label, cfg).loss, seg, 1e-12);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  for (double beta : {1e-5, 0.5, 1.0}) {
    SegModel m = SegModel::custom({3, 1}, {3, 4, 3});
    m.init(18);
    for (auto& l : m.layers)
      for (double& b : l.bias) b = 0.05;
    const auto inst = gradcheck::random_instance(8, 3, 19);
    TrainConfig cfg;
    cfg.beta = beta;
    cfg.class_weights = {1.0, 2.0, 0.5};
    cfg.num_classes = 3;
    const auto rep = gradcheck::check_total_loss(m, inst.streams, inst.label, cfg, 1e-4);
    EXPECT_TRUE(rep.ok) << "beta=" << beta << " worst=" << rep.worst_rel;
  }
}

TEST(TotalLoss, ConsistencyArgumentsCommute) {
  SegModel m = SegModel::custom({3, 1}, {3, 4, 3});
  m.init(20);
  auto inst = gradcheck::random_instance(8, 3, 21);
  TrainConfig cfg;
  cfg.beta = 0.3;
  const TotalLoss a = total_loss(m, inst.streams, inst.label, cfg);
  std::swap(inst.streams.gtr, inst.streams.ltr);
  const TotalLoss b = total_loss(m, inst.streams, inst.label, cfg);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  for (std::size_t l = 0; l < m.layers.size(); ++l)
    for (std::size_t i = 0; i < a.grad.layers[l].weight.size(); ++i)
      EXPECT_NEAR(a.grad.layers[l].weight[i], b.grad.layers[l].weight[i], 1e-12);
}

TEST(Sgd, PolySchedule) {
  EXPECT_EQ(poly_lr(1e-5, 0, 200000, 0.9), 1e-5);
  const double tail = 1e-5 * std::pow(1.0 / 200000, 0.9);
  EXPECT_NEAR(poly_lr(1e-5, 199999, 200000, 0.9), tail, 1e-9 * tail);
  double prev = poly_lr(0.1, 0, 50, 0.9);
  for (int t = 1; t < 50; ++t) {
    const double lr = poly_lr(0.1, t, 50, 0.9);
    EXPECT_LT(lr, prev);
    prev = lr;
  }
  EXPECT_THROW(poly_lr(0.1, 50, 50, 0.9), Error);
}

TEST(Sgd, UpdateRule) {
  SegModel m = SegModel::custom({1}, {3, 2});
  m.init(1);
  const SegModel before = m;
  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.lr0 = 0.5;
  cfg.weight_decay = 0.0;
  Sgd sgd(m);
  ModelGrad zero(m);
  sgd.step(m, zero, 0, cfg);
  EXPECT_EQ(m.layers[0].weight, before.layers[0].weight);

  ModelGrad g(m);
  g.layers[0].weight[0] = 1.0;
  cfg.weight_decay = 0.1;
  cfg.momentum = 0.9;
  const double w0 = m.layers[0].weight[0];
  const double lr0 = sgd.step(m, g, 1, cfg);
  const double v1 = 1.0 + 0.1 * w0;
  EXPECT_NEAR(m.layers[0].weight[0], w0 - lr0 * v1, 1e-15);
  const double w1 = m.layers[0].weight[0];
  const double lr1 = sgd.step(m, g, 2, cfg);
  const double v2 = 0.9 * v1 + 1.0 + 0.1 * w1;
  EXPECT_NEAR(m.layers[0].weight[0], w1 - lr1 * v2, 1e-15);
}

TEST(Miou, ClosedForms) {
  const LabelMap gt = random_labels(6, 6, 3, 22);
  const IouResult same = miou(gt, gt, 3);
  EXPECT_EQ(same.mean, 1.0);
  LabelMap a(2, 4), b(2, 4);
  for (int x = 0; x < 2; ++x) a.at(0, x) = 1;
  for (int x = 2; x < 4; ++x) b.at(1, x) = 1;
  const IouResult r = miou(a, b, 2);
  EXPECT_EQ(*r.per_class[1], 0.0);
  const IouResult absent = miou(LabelMap(2, 2, 0), LabelMap(2, 2, 0), 3);
  EXPECT_FALSE(absent.per_class[1].has_value());
  EXPECT_EQ(absent.mean, 1.0);
  EXPECT_THROW(miou(LabelMap(2, 2, 3), LabelMap(2, 2, 0), 3), Error);
  EXPECT_THROW(miou(LabelMap(2, 2), LabelMap(2, 3), 3), Error);
  ConfusionMatrix empty(2);
  EXPECT_THROW(empty.iou(), Error);
}

TEST(Miou, MatchesCountingOracle) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const LabelMap p = random_labels(8, 8, 2, 100 + s), g = random_labels(8, 8, 2, 200 + s);
    const IouResult r = miou(p, g, 2);
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < 2; ++c) {
      int tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < 64; ++i) {
        tp += p.labels[i] == c && g.labels[i] == c;
        fp += p.labels[i] == c && g.labels[i] != c;
        fn += p.labels[i] != c && g.labels[i] == c;
      }
      if (tp + fp + fn == 0) continue;
      const double iou = static_cast<double>(tp) / (tp + fp + fn);
      EXPECT_EQ(*r.per_class[c], iou);
      sum += iou;
      ++present;
    }
    EXPECT_EQ(r.mean, sum / present);
  }
}

TEST(ToyDataset, DeterministicAndShared) {
  const auto a = gen_toy_dataset(Domain::source, 5, 3);
  const auto b = gen_toy_dataset(Domain::source, 5, 3);
  const auto t = gen_toy_dataset(Domain::target, 5, 3);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].label, t[i].label);
    EXPECT_NE(a[i].image, t[i].image);
    EXPECT_EQ(a[i].image.height(), 64);
    EXPECT_EQ(a[i].label.height, 64);
    EXPECT_TRUE(a[i].image.in_range());
  }
  EXPECT_THROW(gen_toy_dataset(Domain::source, 0, 1), Error);
  EXPECT_EQ(parse_domain("target"), Domain::target);
  EXPECT_THROW(parse_domain("real"), Error);
}

TEST(ToyDataset, ClassFrequencies) {
  const auto data = gen_toy_dataset(Domain::source, 1000, 4);
  std::vector<double> counts(4, 0.0);
  for (const auto& s : data)
    for (auto y : s.label.labels) counts[y] += 1.0;
  const double total = 1000.0 * 64 * 64;
  EXPECT_GT(counts[0] / total, 0.5);
  for (int c = 1; c < 4; ++c) EXPECT_GE(counts[c] / total, 0.05) << "class " << c;
}

TEST(ToyDataset, DomainsDifferInPixelStatistics) {
  const auto s = gen_toy_dataset(Domain::source, 50, 5);
  const auto t = gen_toy_dataset(Domain::target, 50, 5);
  double ds = 0.0, dt = 0.0;
  for (int i = 0; i < 50; ++i) {
    ds += channel_stats(s[i].image).stddev[0];
    dt += channel_stats(t[i].image).stddev[0];
  }
  EXPECT_GT(std::fabs(ds - dt) / 50.0, 1e-3);
}

TEST(Config, ParsingAndValidation) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.beta, 1e-5);
  EXPECT_EQ(cfg.lr0, 1e-5);
  EXPECT_EQ(cfg.poly_power, 0.9);
  EXPECT_EQ(cfg.momentum, 0.9);
  EXPECT_EQ(cfg.weight_decay, 5e-4);
  EXPECT_EQ(cfg.batch_size, 2);
  apply_config_text(cfg, "# comment\n beta = 0.25 \niterations=7\nclass_weights=1, 2,3,4\ngtr=false # trailing\n\n");
  EXPECT_EQ(cfg.beta, 0.25);
  EXPECT_EQ(cfg.iterations, 7);
  EXPECT_EQ(cfg.class_weights, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_FALSE(cfg.gtr);
  EXPECT_THROW(apply_config_text(cfg, "nonsense=1"), Error);
  EXPECT_THROW(apply_config_text(cfg, "beta"), Error);
  EXPECT_THROW(apply_config_text(cfg, "beta=abc"), Error);
  EXPECT_THROW(apply_config_text(cfg, "seed=-3"), Error);
  TrainConfig bad;
  bad.beta = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  bad = {};
  bad.class_weights = {1, 1, 0, 1};
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(load_config("/nonexistent/train.cfg"), Error);
}

TEST(Train, SegLossHalvesWithoutAugmentation) {
  TrainConfig cfg = quiet_config();
  cfg.iterations = 2000;
  cfg.seed = 3;
  const auto data = gen_toy_dataset(Domain::source, 200, 11);
  const TrainResult r = train(cfg, {}, data);
  ASSERT_GE(r.log.size(), 2u);
  auto window = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += r.log[i].l_seg;
    return s / static_cast<double>(to - from);
  };
  const double early = r.log.front().l_seg;
  const double late = window(r.log.size() - 5, r.log.size());
  EXPECT_LE(late, 0.5 * early) << "early " << early << " late " << late;
  for (const auto& e : r.log) EXPECT_EQ(e.l_con, 0.0);
}

TEST(Train, BitwiseDeterministic) {
  TrainConfig cfg = quiet_config();
  cfg.gtr = cfg.ltr = cfg.cgl = cfg.mirror = cfg.blur = true;
  cfg.iterations = 30;
  cfg.log_every = 5;
  cfg.seed = 9;
  const auto data = gen_toy_dataset(Domain::source, 20, 12);
  std::vector<tcps::PaintingRecord> pool(2);
  pool[0].image = random_image(40, 40, 3, 1);
  pool[1].image = random_image(50, 30, 3, 2);
  const TrainResult a = train(cfg, pool, data);
  const TrainResult b = train(cfg, pool, data);
  EXPECT_EQ(encode_tensors(a.model.to_tensors()), encode_tensors(b.model.to_tensors()));
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(format_log_line(a.log[i]), format_log_line(b.log[i]));
  EXPECT_GT(a.log.back().l_con, 0.0);
  cfg.seed = 10;
  EXPECT_NE(encode_tensors(train(cfg, pool, data).model.to_tensors()), encode_tensors(a.model.to_tensors()));
}

TEST(Train, Preconditions) {
  TrainConfig cfg = quiet_config();
  cfg.iterations = 2;
  cfg.gtr = true;
  const auto data = gen_toy_dataset(Domain::source, 2, 1);
  EXPECT_THROW(train(cfg, {}, data), Error);
  EXPECT_THROW(train(quiet_config(), {}, {}), Error);
}

TEST(Train, NonFiniteLossAborts) {
  TrainConfig cfg = quiet_config();
  cfg.iterations = 50;
  cfg.lr0 = 1e6;
  const auto data = gen_toy_dataset(Domain::source, 4, 1);
  try {
    train(cfg, {}, data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Train, LogCsv) {
  testing_support::TempDir dir("log");
  write_log_csv(dir / "train.log", {{0, 0.01, 1.5, 0.25}, {100, 0.005, 0.75, 0.0}});
  std::ifstream in(dir / "train.log");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(),
            "iter,lr,l_seg,l_con\n0,1.000000000e-02,1.500000000e+00,2.500000000e-01\n"
            "100,5.000000000e-03,7.500000000e-01,0.000000000e+00\n");
}
