#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "edgeadain/edge.hpp"
#include "edgeadain/image.hpp"
#include "edgeadain/nn.hpp"
#include "edgeadain/weights.hpp"

namespace edgeadain {

enum class EncoderVariant { vgg19, tiny };

const char* variant_name(EncoderVariant v);
EncoderVariant parse_variant(const std::string& name);

/// Tap widths (relu1_1..relu4_1) of each encoder variant.
std::array<int, 4> tap_channels(EncoderVariant v);

inline constexpr std::uint64_t kTinyEncoderSeed = 0x5eed'e9c0'de70'0001ULL;
inline constexpr float kLeakySlope = 0.01f;
inline constexpr int kCbamReduction = 16;

/// VGG-19 convolutions up to relu4_1 with reflection padding. Frozen.
struct EncoderWeights {
  EncoderVariant variant = EncoderVariant::tiny;
  nn::Network net;

  /// Layer plan with zero-initialised parameters.
  static EncoderWeights architecture(EncoderVariant variant);
  /// Seeded He-uniform weights for the tiny variant.
  static EncoderWeights tiny(std::uint64_t seed = kTinyEncoderSeed);
};

/// Mirror of the encoder with nearest-neighbour upsampling and LeakyReLU.
struct DecoderWeights {
  nn::Network net;

  static DecoderWeights architecture(EncoderVariant variant);
  static DecoderWeights initialise(EncoderVariant variant, std::uint64_t seed);
};

/// Channel attention MLP shared between the average- and max-pooled
/// descriptors, followed by a 7×7 spatial attention convolution.
struct CbamWeights {
  int channels = 0;
  int hidden = 0;
  std::vector<float> fc1_weight;  // hidden × channels
  std::vector<float> fc1_bias;    // hidden
  std::vector<float> fc2_weight;  // channels × hidden
  std::vector<float> fc2_bias;    // channels
  nn::Conv2d spatial;             // 2 → 1, 7×7, zero padding

  static CbamWeights architecture(int channels, int reduction = kCbamReduction);
  static CbamWeights initialise(int channels, std::uint64_t seed, int reduction = kCbamReduction);
};

struct StyleNetWeights {
  EncoderWeights encoder;
  CbamWeights cbam;
  DecoderWeights decoder;

  /// Fresh network: tiny encoder (or zeros for vgg19, to be loaded) plus seeded CBAM/decoder.
  static StyleNetWeights initialise(EncoderVariant variant, std::uint64_t seed);
};

std::vector<TensorView> tensor_views(const EncoderWeights& w);
std::vector<TensorView> tensor_views(const CbamWeights& w);
std::vector<TensorView> tensor_views(const DecoderWeights& w);
std::vector<TensorView> tensor_views(const StyleNetWeights& w);

void load_from(const WeightContainer& c, EncoderWeights& w);
void load_from(const WeightContainer& c, CbamWeights& w);
void load_from(const WeightContainer& c, DecoderWeights& w);

/// relu4_1 features of an RGB image whose sides are multiples of 8.
FeatureMap encode(const Image& img, const EncoderWeights& w);

/// relu1_1, relu2_1, relu3_1, relu4_1 from one forward pass.
std::vector<FeatureMap> encode_taps(const Image& img, const EncoderWeights& w);

struct CbamTrace {
  FeatureMap input;
  std::vector<float> avg, max;
  std::vector<int> max_index;           // spatial argmax per channel
  std::vector<float> hidden_avg, hidden_max;  // pre-activation hidden units
  std::vector<float> channel_mask;
  FeatureMap gated;                     // input ⊙ channel mask
  FeatureMap pooled;                    // [channel mean; channel max] of gated
  std::vector<int> pooled_max_index;    // channel argmax per pixel
  FeatureMap spatial_mask;
};

struct CbamGrads {
  std::vector<float> fc1_weight, fc1_bias, fc2_weight, fc2_bias;
  nn::ConvGrad spatial;

  static CbamGrads zeros(const CbamWeights& w);
};

FeatureMap cbam_refine(const FeatureMap& fm, const CbamWeights& w, CbamTrace* trace = nullptr);
FeatureMap cbam_backward(const CbamTrace& trace, const CbamWeights& w, const FeatureMap& grad_out,
                         CbamGrads* grads);

/// σ(s)·(c − μ(c))/σ(c) + μ(s) per channel.
FeatureMap adain(const FeatureMap& content, const FeatureMap& style, double eps = kStatsEps);

/// Gradient of adain with respect to the content features (style treated as constant).
FeatureMap adain_backward(const FeatureMap& content, const FeatureMap& style,
                          const FeatureMap& grad_out, double eps = kStatsEps);

/// adacs + edge_weight · edge_fm.
FeatureMap fuse(const FeatureMap& adacs, const FeatureMap& edge_fm, float edge_weight);

/// ×8 upsampled, 3-channel, unclamped output.
Image decode(const FeatureMap& fm, const DecoderWeights& w);

struct StylizeConfig {
  float edge_weight = 1.0f;
};

/// decode(fuse(adain(cbam(encode(content)), encode(style)), encode(edge), w)),
/// with reflect padding to multiples of 8 and cropping back to the content size.
Image stylize(const Image& content, const Image& style, const EdgeMap& edge,
              const StyleNetWeights& weights, const StylizeConfig& cfg = {});

}  // namespace edgeadain
