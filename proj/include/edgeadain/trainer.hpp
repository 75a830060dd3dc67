#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edgeadain/edge.hpp"
#include "edgeadain/losses.hpp"
#include "edgeadain/stylenet.hpp"

namespace edgeadain {

struct TrainConfig {
  int iterations = 20000;
  double learning_rate = 1e-4;
  double lr_decay = 5e-5;  // lr_t = lr / (1 + lr_decay · t)
  int crop = 256;
  int batch = 1;
  LossWeights weights;
  std::uint64_t seed = 0;
  int checkpoint_every = 1000;  // 0 disables intermediate checkpoints
  EncoderVariant encoder_variant = EncoderVariant::tiny;
  std::filesystem::path encoder_weights;  // container with encoder.* tensors (vgg19)
  float edge_weight = 1.0f;
  EdgeProvider edge_provider = EdgeProvider::classical_fallback;
  std::filesystem::path edge_dir;  // same file names as the content images

  void validate() const;
};

struct Checkpoint {
  StyleNetWeights weights;
  TrainConfig config;
  int iteration = 0;
  std::string rng_state;
};

/// Weight container (encoder, CBAM and decoder tensors) plus checkpoint.json.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Fresh network for a config: encoder per variant, seeded CBAM and decoder.
StyleNetWeights initial_weights(const TrainConfig& cfg);

struct TrainableGrads {
  std::vector<nn::ConvGrad> decoder;
  CbamGrads cbam;

  static TrainableGrads zeros(const StyleNetWeights& w);
};

/// One forward/backward pass on a (content, style, edge) sample. Gradients of
/// the weighted total loss with respect to decoder and CBAM parameters are
/// added into `grads` when non-null; the encoder receives none.
LossReport compute_loss_and_grads(const StyleNetWeights& w, const Image& content,
                                  const Image& style, const Image& edge, const TrainConfig& cfg,
                                  TrainableGrads* grads);

/// Adam with bias correction over the decoder and CBAM parameters.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const StyleNetWeights& w, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);
  void step(StyleNetWeights& w, const TrainableGrads& grads, double lr, double grad_scale = 1.0);
  int steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

/// Trains decoder and CBAM. Writes train_log.csv, periodic checkpoints
/// (checkpoint_NNNNNN/) and final/ under out_dir.
Checkpoint train(const std::filesystem::path& content_dir, const std::filesystem::path& style_dir,
                 const TrainConfig& cfg, const std::filesystem::path& out_dir);

/// Sorted PNG files of a directory.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace edgeadain
