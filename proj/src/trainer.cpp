#include "edgeadain/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "edgeadain/config.hpp"
#include "edgeadain/png_io.hpp"

namespace edgeadain {

void TrainConfig::validate() const {
  if (iterations < 1) throw Error("iterations must be >= 1");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (lr_decay < 0.0) throw Error("lr_decay must be >= 0");
  if (crop < 8) throw Error("crop must be >= 8");
  if (batch < 1) throw Error("batch must be >= 1");
  if (checkpoint_every < 0) throw Error("checkpoint_every must be >= 0");
  if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0) {
    throw Error("loss weights must be >= 0");
  }
  if (edge_provider == EdgeProvider::external_file && edge_dir.empty()) {
    throw Error("edge_provider=file requires edge_dir");
  }
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

StyleNetWeights initial_weights(const TrainConfig& cfg) {
  StyleNetWeights w = StyleNetWeights::initialise(cfg.encoder_variant, cfg.seed);
  if (!cfg.encoder_weights.empty()) {
    load_from(WeightContainer::load(cfg.encoder_weights), w.encoder);
  } else if (cfg.encoder_variant == EncoderVariant::vgg19) {
    throw Error("the vgg19 encoder requires encoder weights");
  }
  return w;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  save_container(dir, tensor_views(ckpt.weights));
  nlohmann::ordered_json meta;
  meta["iteration"] = ckpt.iteration;
  meta["rng_state"] = ckpt.rng_state;
  meta["config"] = to_json(ckpt.config);
  std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
  if (!out) throw Error("cannot write " + (dir / "checkpoint.json").string());
  out << meta.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw Error("missing checkpoint metadata: " + (dir / "checkpoint.json").string());
  Checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(in);
    ckpt.iteration = meta.at("iteration").get<int>();
    ckpt.rng_state = meta.at("rng_state").get<std::string>();
    apply_json(meta.at("config"), ckpt.config);
  } catch (const nlohmann::json::exception& ex) {
    throw Error("corrupt checkpoint metadata in " + dir.string() + ": " + ex.what());
  }
  const auto variant = ckpt.config.encoder_variant;
  ckpt.weights.encoder = EncoderWeights::architecture(variant);
  ckpt.weights.cbam = CbamWeights::architecture(tap_channels(variant)[3]);
  ckpt.weights.decoder = DecoderWeights::architecture(variant);
  const auto container = WeightContainer::load(dir);
  load_from(container, ckpt.weights.encoder);
  load_from(container, ckpt.weights.cbam);
  load_from(container, ckpt.weights.decoder);
  return ckpt;
}

TrainableGrads TrainableGrads::zeros(const StyleNetWeights& w) {
  return {nn::zero_grads(w.decoder.net), CbamGrads::zeros(w.cbam)};
}

LossReport compute_loss_and_grads(const StyleNetWeights& w, const Image& content,
                                  const Image& style, const Image& edge, const TrainConfig& cfg,
                                  TrainableGrads* grads) {
  const Image content_rgb = to_rgb(content);
  const Image style_rgb = to_rgb(style);
  const Image edge_rgb = to_rgb(edge);

  const FeatureMap fc = encode(content_rgb, w.encoder);
  const std::vector<FeatureMap> style_taps = encode_taps(style_rgb, w.encoder);
  const std::vector<FeatureMap> edge_taps = encode_taps(edge_rgb, w.encoder);

  CbamTrace cbam_trace;
  const FeatureMap refined = cbam_refine(fc, w.cbam, &cbam_trace);
  const FeatureMap adacs = adain(refined, style_taps.back());
  const FeatureMap mod = fuse(adacs, edge_taps.back(), cfg.edge_weight);

  nn::Trace dec_trace;
  const FeatureMap out = nn::forward(w.decoder.net, mod, &dec_trace);
  nn::Trace enc_trace;
  std::vector<FeatureMap> out_taps;
  nn::forward(w.encoder.net, out, &enc_trace, &out_taps);

  const double lc = content_loss(out_taps.back(), adacs);
  const double ls = style_loss(out_taps, style_taps);
  const double le = edge_loss(out_taps, edge_taps);
  const LossReport report = total_loss(lc, ls, le, cfg.weights);
  if (!grads) return report;

  // Loss gradients at each output tap; AdaCS is a fixed target.
  std::vector<FeatureMap> tap_grads = style_loss_grad(out_taps, style_taps);
  const std::vector<FeatureMap> edge_grads = edge_loss_grad(out_taps, edge_taps);
  const FeatureMap content_grad = content_loss_grad(out_taps.back(), adacs);
  for (std::size_t t = 0; t < tap_grads.size(); ++t) {
    auto g = tap_grads[t].data();
    auto e = edge_grads[t].data();
    const bool last = t + 1 == tap_grads.size();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double v = cfg.weights.beta * g[i] + cfg.weights.gamma * e[i];
      if (last) v += cfg.weights.alpha * content_grad.data()[i];
      g[i] = static_cast<float>(v);
    }
  }
  // The encoder is frozen: only its input gradient is needed.
  const FeatureMap d_out = nn::backward(w.encoder.net, enc_trace, FeatureMap(), tap_grads, nullptr);
  const FeatureMap d_mod = nn::backward(w.decoder.net, dec_trace, d_out, {}, &grads->decoder);
  const FeatureMap d_refined = adain_backward(refined, style_taps.back(), d_mod);
  cbam_backward(cbam_trace, w.cbam, d_refined, &grads->cbam);
  return report;
}

namespace {

// Parameter/gradient pairs in a fixed order shared by the optimizer state.
template <typename W, typename G>
void for_each_param(W& w, G& g, auto&& fn) {
  for (std::size_t i = 0; i < w.decoder.net.convs.size(); ++i) {
    fn(w.decoder.net.convs[i].weight, g.decoder[i].weight);
    fn(w.decoder.net.convs[i].bias, g.decoder[i].bias);
  }
  fn(w.cbam.fc1_weight, g.cbam.fc1_weight);
  fn(w.cbam.fc1_bias, g.cbam.fc1_bias);
  fn(w.cbam.fc2_weight, g.cbam.fc2_weight);
  fn(w.cbam.fc2_bias, g.cbam.fc2_bias);
  fn(w.cbam.spatial.weight, g.cbam.spatial.weight);
  fn(w.cbam.spatial.bias, g.cbam.spatial.bias);
}

}  // namespace

AdamOptimizer::AdamOptimizer(const StyleNetWeights& w, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  const TrainableGrads shape = TrainableGrads::zeros(w);
  for_each_param(w, shape, [&](const std::vector<float>& p, const std::vector<float>&) {
    m_.emplace_back(p.size(), 0.0f);
    v_.emplace_back(p.size(), 0.0f);
  });
}

void AdamOptimizer::step(StyleNetWeights& w, const TrainableGrads& grads, double lr,
                         double grad_scale) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  std::size_t k = 0;
  for_each_param(w, grads, [&](std::vector<float>& p, const std::vector<float>& g) {
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * grad_scale;
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] = static_cast<float>(p[i] - lr * mhat / (std::sqrt(vhat) + eps_));
    }
    ++k;
  });
}

namespace {

struct Dataset {
  std::vector<std::filesystem::path> files;
  std::vector<Image> images;
};

Dataset load_dataset(const std::filesystem::path& dir, const char* what) {
  Dataset d;
  d.files = list_pngs(dir);
  if (d.files.empty()) throw Error(std::string("no ") + what + " images in " + dir.string());
  for (const auto& f : d.files) d.images.push_back(to_rgb(read_png(f)));
  return d;
}

std::string format_row(int iter, const LossReport& r, double lr) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g", iter, r.content, r.style,
                r.edge, r.total, lr);
  return buf;
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

Checkpoint train(const std::filesystem::path& content_dir, const std::filesystem::path& style_dir,
                 const TrainConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const Dataset contents = load_dataset(content_dir, "content");
  const Dataset styles = load_dataset(style_dir, "style");

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.weights = initial_weights(cfg);
  AdamOptimizer adam(ckpt.weights);
  std::mt19937_64 rng(cfg.seed);

  std::filesystem::create_directories(out_dir);
  std::ofstream log(out_dir / "train_log.csv", std::ios::trunc);
  if (!log) throw Error("cannot write " + (out_dir / "train_log.csv").string());
  log << "iter,content,style,edge,total,lr\n";

  for (int it = 0; it < cfg.iterations; ++it) {
    const double lr = cfg.learning_rate / (1.0 + cfg.lr_decay * it);
    TrainableGrads grads = TrainableGrads::zeros(ckpt.weights);
    LossReport mean{};
    for (int b = 0; b < cfg.batch; ++b) {
      const auto ci = bounded(rng(), contents.images.size());
      const auto si = bounded(rng(), styles.images.size());
      const std::uint64_t content_seed = rng();
      const std::uint64_t style_seed = rng();

      const Image content_src = upscale_to_min_side(contents.images[ci], cfg.crop);
      const CropOrigin origin =
          crop_origin(content_src.height(), content_src.width(), cfg.crop, content_seed);
      const Image content = crop(content_src, origin, cfg.crop, cfg.crop);
      const Image style = random_crop(upscale_to_min_side(styles.images[si], cfg.crop), cfg.crop,
                                      style_seed);
      Image edge;
      if (cfg.edge_provider == EdgeProvider::external_file) {
        const auto path = cfg.edge_dir / contents.files[ci].filename();
        const Image full = to_gray(read_png(path));
        if (full.height() != contents.images[ci].height() ||
            full.width() != contents.images[ci].width()) {
          throw Error("edge map size mismatch: " + path.string());
        }
        edge = crop(upscale_to_min_side(full, cfg.crop), origin, cfg.crop, cfg.crop);
      } else {
        edge = scharr_edges(content).strength;
      }

      LossReport r;
      try {
        r = compute_loss_and_grads(ckpt.weights, content, style, edge, cfg, &grads);
      } catch (const Error& ex) {
        throw Error("iteration " + std::to_string(it + 1) + ": " + ex.what());
      }
      mean.content += r.content / cfg.batch;
      mean.style += r.style / cfg.batch;
      mean.edge += r.edge / cfg.batch;
    }
    mean = total_loss(mean.content, mean.style, mean.edge, cfg.weights);
    adam.step(ckpt.weights, grads, lr, 1.0 / cfg.batch);
    log << format_row(it + 1, mean, lr) << "\n";

    ckpt.iteration = it + 1;
    if (cfg.checkpoint_every > 0 && ckpt.iteration % cfg.checkpoint_every == 0 &&
        ckpt.iteration != cfg.iterations) {
      char name[32];
      std::snprintf(name, sizeof name, "checkpoint_%06d", ckpt.iteration);
      ckpt.rng_state = rng_state(rng);
      save_checkpoint(ckpt, out_dir / name);
    }
  }
  log.flush();
  ckpt.rng_state = rng_state(rng);
  save_checkpoint(ckpt, out_dir / "final");
  return ckpt;
}

}  // namespace edgeadain
