#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "edgeadain/config.hpp"
#include "edgeadain/losses.hpp"
#include "edgeadain/pipeline.hpp"
#include "edgeadain/png_io.hpp"
#include "edgeadain/trainer.hpp"
#include "edgeadain/weights.hpp"
#include "test_util.hpp"

using namespace edgeadain;
using namespace testutil;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_dataset(const std::filesystem::path& dir, int n, int h, int w, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img%02d.png", i);
    write_png(dir / name, random_image(h, w, 3, seed + i));
  }
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.iterations = 3;
  cfg.crop = 16;
  cfg.seed = 5;
  cfg.checkpoint_every = 2;
  cfg.learning_rate = 1e-3;
  return cfg;
}

std::vector<std::vector<double>> read_log(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,content,style,edge,total,lr");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

// Perturbation direction over all trainable parameters.
struct Direction {
  std::vector<std::vector<float>> dec_w, dec_b;
  std::vector<float> fc1w, fc1b, fc2w, fc2b, sw, sb;

  std::vector<std::vector<float>*> decoder_parts() {
    std::vector<std::vector<float>*> p;
    for (auto& v : dec_w) p.push_back(&v);
    for (auto& v : dec_b) p.push_back(&v);
    return p;
  }
  std::vector<std::vector<float>*> cbam_parts() { return {&fc1w, &fc1b, &fc2w, &fc2b, &sw, &sb}; }
};

void scale_to_unit(const std::vector<std::vector<float>*>& parts) {
  double norm = 0.0;
  for (const auto* p : parts)
    for (float x : *p) norm += double(x) * x;
  if (norm == 0.0) return;
  const float scale = static_cast<float>(1.0 / std::sqrt(norm));
  for (auto* p : parts)
    for (float& x : *p) x *= scale;
}

Direction gradient_as_direction(const TrainableGrads& g) {
  Direction d;
  for (const auto& c : g.decoder) {
    d.dec_w.push_back(c.weight);
    d.dec_b.push_back(c.bias);
  }
  d.fc1w = g.cbam.fc1_weight;
  d.fc1b = g.cbam.fc1_bias;
  d.fc2w = g.cbam.fc2_weight;
  d.fc2b = g.cbam.fc2_bias;
  d.sw = g.cbam.spatial.weight;
  d.sb = g.cbam.spatial.bias;
  return d;
}

// Unit direction halfway between the gradient and a random vector, restricted to one
// parameter group. A purely random direction in this many dimensions has a derivative far
// below the finite-difference noise.
Direction probe_direction(const TrainableGrads& g, std::uint64_t seed, bool decoder) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  Direction grad = gradient_as_direction(g);
  Direction rand = grad;
  auto active = [&](Direction& d) { return decoder ? d.decoder_parts() : d.cbam_parts(); };
  auto inactive = [&](Direction& d) { return decoder ? d.cbam_parts() : d.decoder_parts(); };
  for (auto* p : active(rand))
    for (float& x : *p) x = normal(rng);
  for (Direction* d : {&grad, &rand}) {
    for (auto* p : inactive(*d)) std::fill(p->begin(), p->end(), 0.0f);
    scale_to_unit(active(*d));
  }
  auto gp = active(grad), rp = active(rand);
  for (std::size_t i = 0; i < gp.size(); ++i)
    for (std::size_t j = 0; j < gp[i]->size(); ++j) (*gp[i])[j] += (*rp[i])[j];
  scale_to_unit(active(grad));
  return grad;
}

StyleNetWeights moved(StyleNetWeights w, const Direction& d, float h) {
  auto add = [h](std::vector<float>& p, const std::vector<float>& u) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += h * u[i];
  };
  for (std::size_t i = 0; i < w.decoder.net.convs.size(); ++i) {
    add(w.decoder.net.convs[i].weight, d.dec_w[i]);
    add(w.decoder.net.convs[i].bias, d.dec_b[i]);
  }
  add(w.cbam.fc1_weight, d.fc1w);
  add(w.cbam.fc1_bias, d.fc1b);
  add(w.cbam.fc2_weight, d.fc2w);
  add(w.cbam.fc2_bias, d.fc2b);
  add(w.cbam.spatial.weight, d.sw);
  add(w.cbam.spatial.bias, d.sb);
  return w;
}

double directional(const TrainableGrads& g, const Direction& d) {
  auto dot = [](const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
    return s;
  };
  double s = 0;
  for (std::size_t i = 0; i < g.decoder.size(); ++i) s += dot(g.decoder[i].weight, d.dec_w[i]) + dot(g.decoder[i].bias, d.dec_b[i]);
  s += dot(g.cbam.fc1_weight, d.fc1w) + dot(g.cbam.fc1_bias, d.fc1b) + dot(g.cbam.fc2_weight, d.fc2w) +
       dot(g.cbam.fc2_bias, d.fc2b) + dot(g.cbam.spatial.weight, d.sw) + dot(g.cbam.spatial.bias, d.sb);
  return s;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.lr_decay, 5e-5);
  EXPECT_EQ(cfg.crop, 256);
  EXPECT_EQ(cfg.batch, 1);
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.crop = 4;
  EXPECT_THROW(cfg.validate(), Error);
}

// Forward-only loss with the content target pinned, composed from the layer primitives.
double loss_with_target(const StyleNetWeights& w, const Image& content, const Image& style, const Image& edge,
                        const FeatureMap& target, const TrainConfig& cfg) {
  const std::vector<FeatureMap> st = encode_taps(to_rgb(style), w.encoder);
  const std::vector<FeatureMap> et = encode_taps(to_rgb(edge), w.encoder);
  const FeatureMap adacs = adain(cbam_refine(encode(to_rgb(content), w.encoder), w.cbam), st.back());
  const FeatureMap out = nn::forward(w.decoder.net, fuse(adacs, et.back(), cfg.edge_weight));
  std::vector<FeatureMap> taps;
  nn::forward(w.encoder.net, out, nullptr, &taps);
  return total_loss(content_loss(taps.back(), target), style_loss(taps, st), edge_loss(taps, et), cfg.weights)
      .total;
}

TEST(Training, GradientsMatchFiniteDifferences) {
  TrainConfig cfg;
  const StyleNetWeights w = StyleNetWeights::initialise(EncoderVariant::tiny, 11);
  const Image content = random_image(32, 32, 3, 1);
  const Image style = random_image(32, 32, 3, 2);
  const Image edge = scharr_edges(content).strength;
  TrainableGrads g = TrainableGrads::zeros(w);
  const double loss = compute_loss_and_grads(w, content, style, edge, cfg, &g).total;
  // AdaCS is a constant target for the gradient.
  const FeatureMap target =
      adain(cbam_refine(encode(to_rgb(content), w.encoder), w.cbam), encode(to_rgb(style), w.encoder));
  ASSERT_NEAR(loss_with_target(w, content, style, edge, target, cfg), loss, 1e-9 * loss);
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Direction dir = probe_direction(g, 100 + s, s % 2 == 0);
    const float h = 3e-4f;
    const double lp = loss_with_target(moved(w, dir, h), content, style, edge, target, cfg);
    const double lm = loss_with_target(moved(w, dir, -h), content, style, edge, target, cfg);
    const double fd = (lp - lm) / (2 * h);
    EXPECT_NEAR(directional(g, dir), fd, 1e-2 * std::abs(fd)) << (s % 2 == 0 ? "decoder" : "cbam") << " probe " << s;
  }
}

TEST(Training, AdamFirstStepMovesByLearningRate) {
  StyleNetWeights w = StyleNetWeights::initialise(EncoderVariant::tiny, 1);
  const StyleNetWeights before = w;
  TrainableGrads g = TrainableGrads::zeros(w);
  g.decoder[0].weight[0] = 0.5f;
  g.decoder[0].weight[1] = -2.0f;
  AdamOptimizer adam(w);
  adam.step(w, g, 1e-2);
  EXPECT_NEAR(w.decoder.net.convs[0].weight[0], before.decoder.net.convs[0].weight[0] - 1e-2f, 1e-6);
  EXPECT_NEAR(w.decoder.net.convs[0].weight[1], before.decoder.net.convs[0].weight[1] + 1e-2f, 1e-6);
  EXPECT_EQ(w.decoder.net.convs[0].weight[2], before.decoder.net.convs[0].weight[2]);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir("ckpt");
  Checkpoint ckpt;
  ckpt.config = small_config();
  ckpt.weights = initial_weights(ckpt.config);
  ckpt.iteration = 17;
  ckpt.rng_state = "1 2 3";
  save_checkpoint(ckpt, dir.path());
  const Checkpoint back = load_checkpoint(dir.path());
  EXPECT_EQ(back.iteration, 17);
  EXPECT_EQ(back.rng_state, "1 2 3");
  EXPECT_EQ(to_json(back.config), to_json(ckpt.config));

  const Image content = random_image(24, 24, 1, 3), style = random_image(24, 24, 3, 4);
  const EdgeMap e = scharr_edges(content);
  EXPECT_EQ(stylize(content, style, e, back.weights), stylize(content, style, e, ckpt.weights));

  TempDir again("ckpt2");
  save_checkpoint(back, again.path());
  EXPECT_EQ(slurp(again / "weights.bin"), slurp(dir / "weights.bin"));
}

TEST(Checkpoint, MissingLayerIsNamed) {
  TempDir dir("ckptmiss");
  Checkpoint ckpt;
  ckpt.weights = initial_weights(ckpt.config);
  save_checkpoint(ckpt, dir.path());
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  auto& tensors = manifest["tensors"];
  for (auto it = tensors.begin(); it != tensors.end(); ++it)
    if ((*it)["name"] == "decoder.conv2_1.bias") {
      tensors.erase(it);
      break;
    }
  std::ofstream(dir / "manifest.json") << manifest.dump();
  try {
    load_checkpoint(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.conv2_1.bias"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, FreshWeightsChecksumIsStable) {
  TempDir dir("ckptsum");
  Checkpoint ckpt;
  ckpt.weights = initial_weights(ckpt.config);
  save_checkpoint(ckpt, dir.path());
  std::printf("weights.bin fnv1a: 0x%016llx\n",
              static_cast<unsigned long long>(fnv1a_file(dir / "weights.bin")));
  EXPECT_EQ(fnv1a_file(dir / "weights.bin"), 0xe6f9240b0de91c8dULL);
}

TEST(Train, OneIterationProducesUsableCheckpoint) {
  TempDir root("train1");
  write_dataset(root / "content", 2, 20, 24, 10);
  write_dataset(root / "style", 1, 16, 16, 20);
  TrainConfig cfg = small_config();
  cfg.iterations = 1;
  const Checkpoint ckpt = train(root / "content", root / "style", cfg, root / "out");
  EXPECT_EQ(ckpt.iteration, 1);
  const auto log = read_log(root / "out" / "train_log.csv");
  EXPECT_EQ(log.size(), 1u);
  const Checkpoint loaded = load_checkpoint(root / "out" / "final");
  const Image c = random_image(16, 16, 3, 1);
  EXPECT_NO_THROW(stylize(c, c, scharr_edges(c), loaded.weights));
}

TEST(Train, DeterministicLogConsistentAndEncoderFrozen) {
  TempDir root("train2");
  write_dataset(root / "content", 3, 16, 16, 30);
  write_dataset(root / "style", 2, 16, 16, 40);
  const TrainConfig cfg = small_config();
  const Checkpoint a = train(root / "content", root / "style", cfg, root / "a");
  const Checkpoint b = train(root / "content", root / "style", cfg, root / "b");
  EXPECT_EQ(slurp(root / "a" / "train_log.csv"), slurp(root / "b" / "train_log.csv"));
  EXPECT_EQ(slurp(root / "a" / "final" / "weights.bin"), slurp(root / "b" / "final" / "weights.bin"));
  EXPECT_TRUE(std::filesystem::exists(root / "a" / "checkpoint_000002" / "weights.bin"));

  const auto log = read_log(root / "a" / "train_log.csv");
  ASSERT_EQ(log.size(), 3u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i][0], double(i + 1));
    const double total = cfg.weights.alpha * log[i][1] + cfg.weights.beta * log[i][2] + cfg.weights.gamma * log[i][3];
    EXPECT_EQ(log[i][4], total);
    EXPECT_DOUBLE_EQ(log[i][5], cfg.learning_rate / (1 + cfg.lr_decay * i));
    for (int k = 1; k <= 4; ++k) EXPECT_GE(log[i][k], 0.0);
  }

  const EncoderWeights frozen = EncoderWeights::tiny();
  for (std::size_t i = 0; i < frozen.net.convs.size(); ++i) {
    EXPECT_EQ(a.weights.encoder.net.convs[i].weight, frozen.net.convs[i].weight);
    EXPECT_EQ(a.weights.encoder.net.convs[i].bias, frozen.net.convs[i].bias);
  }
  const StyleNetWeights init = initial_weights(cfg);
  EXPECT_NE(a.weights.decoder.net.convs[0].weight, init.decoder.net.convs[0].weight);
  EXPECT_NE(a.weights.cbam.fc1_weight, init.cbam.fc1_weight);
}

TEST(Train, SmallImagesAreUpscaled) {
  TempDir root("train3");
  write_dataset(root / "content", 1, 10, 12, 50);
  write_dataset(root / "style", 1, 9, 30, 60);
  TrainConfig cfg = small_config();
  cfg.iterations = 1;
  cfg.batch = 2;
  EXPECT_NO_THROW(train(root / "content", root / "style", cfg, root / "out"));
}

TEST(Train, EmptyDirectoryIsAnError) {
  TempDir root("train4");
  std::filesystem::create_directories(root / "content");
  write_dataset(root / "style", 1, 16, 16, 1);
  EXPECT_THROW(train(root / "content", root / "style", small_config(), root / "out"), Error);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  RunConfig cfg;
  cfg.preprocess.tophat_radii = {2, 4};
  cfg.post.polarity = Polarity::bright_strokes;
  cfg.train.iterations = 77;
  cfg.train.seed = 123456789012345ULL;
  cfg.edge.provider = EdgeProvider::external_file;
  cfg.edge.file = "e.png";
  const auto j = to_json(cfg);
  RunConfig back;
  apply_json(j, back);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.train.seed, 123456789012345ULL);

  RunConfig partial;
  apply_json(nlohmann::json::parse(R"({"post": {"min_component": 4}})"), partial);
  EXPECT_EQ(partial.post.min_component, 4);
  EXPECT_EQ(partial.post.close_radius, PostConfig{}.close_radius);

  try {
    apply_json(nlohmann::json::parse(R"({"post": {"min_componnet": 4}})"), partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("min_componnet"), std::string::npos);
  }
  EXPECT_THROW(apply_json(nlohmann::json::parse(R"({"bogus": 1})"), partial), Error);
}

TEST(Pipeline, SegmentProducesBinaryMaskAndIsDeterministic) {
  const StyleNetWeights w = StyleNetWeights::initialise(EncoderVariant::tiny, 3);
  RunConfig cfg;
  const Image input = random_image(36, 28, 1, 4);
  const Image style = random_image(32, 32, 3, 5);
  const SegmentResult a = segment(input, style, w, cfg);
  const SegmentResult b = segment(input, style, w, cfg);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.mask.height(), 36);
  EXPECT_EQ(a.mask.width(), 28);
  EXPECT_GT(a.times.total, 0.0);

  // Composition of the stage functions.
  const Image pre = preprocess(input, cfg.preprocess);
  const EdgeMap e = detect_edges(pre, cfg.edge);
  const Image st = stylize(pre, style, e, w, cfg.stylize);
  EXPECT_EQ(a.stylized, st);
  EXPECT_EQ(a.mask, cleanup(binarize(clamp01(st), cfg.post), cfg.post));
}

TEST(Pipeline, ConstantInputGivesEmptyMask) {
  const StyleNetWeights w = StyleNetWeights::initialise(EncoderVariant::tiny, 3);
  const SegmentResult r = segment(Image(32, 32, 1, 0.5f), random_image(16, 16, 3, 1), w, RunConfig{});
  EXPECT_EQ(r.mask.count(), 0u);
}

TEST(Pipeline, BenchAccounting) {
  TempDir dir("bench");
  write_dataset(dir / "in", 2, 24, 24, 7);
  const StyleNetWeights w = StyleNetWeights::initialise(EncoderVariant::tiny, 3);
  const auto rows = bench(dir / "in", random_image(16, 16, 3, 1), w, RunConfig{}, 3);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    const double stages = r.mean.preprocess + r.mean.edge + r.mean.stylize + r.mean.postprocess;
    EXPECT_GT(r.mean.total, 0.0);
    EXPECT_GT(r.mean.preprocess, 0.0);
    EXPECT_GT(r.mean.stylize, 0.0);
    EXPECT_NEAR(stages, r.mean.total, 0.05 * r.mean.total);
  }
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "image,height,width,preprocess_mean,preprocess_std,edge_mean,edge_std,stylize_mean,"
            "stylize_std,postprocess_mean,postprocess_std,total_mean,total_std");
  EXPECT_NE(bench_table(rows, "Edge-AdaIN").find("Execution Time/image (s)"), std::string::npos);
  TempDir empty("benchempty");
  EXPECT_THROW(bench(empty.path(), random_image(16, 16, 3, 1), w, RunConfig{}, 1), Error);
}
