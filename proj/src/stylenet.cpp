#include "edgeadain/stylenet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace edgeadain {
namespace {

using nn::Conv2d;
using nn::Op;
using nn::OpKind;
using nn::Padding;

void fill_uniform(std::vector<float>& v, double bound, std::mt19937_64& rng) {
  for (float& x : v) x = static_cast<float>((2.0 * unit_interval(rng()) - 1.0) * bound);
}

// He-uniform for a rectifier with the given negative slope; bias as the usual 1/sqrt(fan_in).
void init_conv(Conv2d& conv, double negative_slope, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(conv.in_channels) * conv.kernel * conv.kernel;
  const double gain = std::sqrt(2.0 / (1.0 + negative_slope * negative_slope));
  fill_uniform(conv.weight, gain * std::sqrt(3.0 / fan_in), rng);
  fill_uniform(conv.bias, 1.0 / std::sqrt(fan_in), rng);
}

struct LayerSpec {
  const char* name;
  int in_tap;   // -1 = RGB input, else index into tap widths
  int out_tap;  // -1 = RGB output
  bool pool_before = false;
  bool upsample_after = false;
};

int width_of(int tap, const std::array<int, 4>& widths) { return tap < 0 ? 3 : widths[tap]; }

std::vector<std::int64_t> conv_shape(const Conv2d& c) {
  return {c.out_channels, c.in_channels, c.kernel, c.kernel};
}

void require_rgb(const Image& img) {
  if (img.channels() != 3) throw Error("encoder expects an RGB image");
  if (img.height() % 8 != 0 || img.width() % 8 != 0) {
    throw Error("encoder input sides must be multiples of 8 (got " + std::to_string(img.height()) +
                "x" + std::to_string(img.width()) + ")");
  }
}

}  // namespace

const char* variant_name(EncoderVariant v) { return v == EncoderVariant::vgg19 ? "vgg19" : "tiny"; }

EncoderVariant parse_variant(const std::string& name) {
  if (name == "vgg19") return EncoderVariant::vgg19;
  if (name == "tiny") return EncoderVariant::tiny;
  throw Error("unknown encoder variant: " + name);
}

std::array<int, 4> tap_channels(EncoderVariant v) {
  if (v == EncoderVariant::vgg19) return {64, 128, 256, 512};
  return {32, 64, 128, 256};
}

EncoderWeights EncoderWeights::architecture(EncoderVariant variant) {
  static const LayerSpec kLayers[] = {
      {"conv1_1", -1, 0},       {"conv1_2", 0, 0},
      {"conv2_1", 0, 1, true},  {"conv2_2", 1, 1},
      {"conv3_1", 1, 2, true},  {"conv3_2", 2, 2},
      {"conv3_3", 2, 2},        {"conv3_4", 2, 2},
      {"conv4_1", 2, 3, true},
  };
  static const Tap kTaps[] = {Tap::relu1_1, Tap::relu2_1, Tap::relu3_1, Tap::relu4_1};
  const auto widths = tap_channels(variant);
  EncoderWeights w;
  w.variant = variant;
  int next_tap = 0;
  for (const auto& spec : kLayers) {
    if (spec.pool_before) w.net.ops.push_back({OpKind::max_pool});
    w.net.ops.push_back({OpKind::conv, static_cast<int>(w.net.convs.size())});
    w.net.convs.emplace_back(std::string("encoder.") + spec.name, width_of(spec.in_tap, widths),
                             width_of(spec.out_tap, widths), 3, Padding::reflect);
    // The first convolution of each stage exposes its activation as a tap.
    const bool is_tap = std::string(spec.name).ends_with("_1");
    w.net.ops.push_back({OpKind::relu, -1, is_tap ? kTaps[next_tap++] : Tap::none});
  }
  return w;
}

EncoderWeights EncoderWeights::tiny(std::uint64_t seed) {
  EncoderWeights w = architecture(EncoderVariant::tiny);
  std::mt19937_64 rng(seed);
  for (auto& conv : w.net.convs) init_conv(conv, 0.0, rng);
  return w;
}

DecoderWeights DecoderWeights::architecture(EncoderVariant variant) {
  static const LayerSpec kLayers[] = {
      {"conv4_1", 3, 2, false, true}, {"conv3_4", 2, 2}, {"conv3_3", 2, 2},
      {"conv3_2", 2, 2},              {"conv3_1", 2, 1, false, true},
      {"conv2_2", 1, 1},              {"conv2_1", 1, 0, false, true},
      {"conv1_2", 0, 0},              {"conv1_1", 0, -1},
  };
  const auto widths = tap_channels(variant);
  DecoderWeights w;
  w.net.leaky_slope = kLeakySlope;
  for (const auto& spec : kLayers) {
    w.net.ops.push_back({OpKind::conv, static_cast<int>(w.net.convs.size())});
    w.net.convs.emplace_back(std::string("decoder.") + spec.name, width_of(spec.in_tap, widths),
                             width_of(spec.out_tap, widths), 3, Padding::reflect);
    if (spec.out_tap >= 0) w.net.ops.push_back({OpKind::leaky_relu});
    if (spec.upsample_after) w.net.ops.push_back({OpKind::upsample});
  }
  return w;
}

DecoderWeights DecoderWeights::initialise(EncoderVariant variant, std::uint64_t seed) {
  DecoderWeights w = architecture(variant);
  std::mt19937_64 rng(seed);
  for (auto& conv : w.net.convs) init_conv(conv, kLeakySlope, rng);
  return w;
}

CbamWeights CbamWeights::architecture(int channels, int reduction) {
  if (channels < 1 || reduction < 1) throw Error("invalid CBAM geometry");
  CbamWeights w;
  w.channels = channels;
  w.hidden = std::max(1, channels / reduction);
  w.fc1_weight.assign(static_cast<std::size_t>(w.hidden) * channels, 0.0f);
  w.fc1_bias.assign(w.hidden, 0.0f);
  w.fc2_weight.assign(static_cast<std::size_t>(channels) * w.hidden, 0.0f);
  w.fc2_bias.assign(channels, 0.0f);
  w.spatial = Conv2d("cbam.spatial", 2, 1, 7, Padding::zero);
  return w;
}

CbamWeights CbamWeights::initialise(int channels, std::uint64_t seed, int reduction) {
  CbamWeights w = architecture(channels, reduction);
  std::mt19937_64 rng(seed);
  fill_uniform(w.fc1_weight, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  fill_uniform(w.fc1_bias, 1.0 / std::sqrt(static_cast<double>(channels)), rng);
  fill_uniform(w.fc2_weight, 1.0 / std::sqrt(static_cast<double>(w.hidden)), rng);
  fill_uniform(w.fc2_bias, 1.0 / std::sqrt(static_cast<double>(w.hidden)), rng);
  fill_uniform(w.spatial.weight, 1.0 / std::sqrt(98.0), rng);
  fill_uniform(w.spatial.bias, 1.0 / std::sqrt(98.0), rng);
  return w;
}

StyleNetWeights StyleNetWeights::initialise(EncoderVariant variant, std::uint64_t seed) {
  StyleNetWeights w;
  w.encoder = variant == EncoderVariant::tiny ? EncoderWeights::tiny()
                                              : EncoderWeights::architecture(variant);
  // Distinct streams for the two trainable blocks.
  w.cbam = CbamWeights::initialise(tap_channels(variant)[3], seed ^ 0xcba3'0000'0000'0001ULL);
  w.decoder = DecoderWeights::initialise(variant, seed ^ 0xdec0'0000'0000'0001ULL);
  return w;
}

std::vector<TensorView> tensor_views(const EncoderWeights& w) {
  std::vector<TensorView> views;
  for (const auto& c : w.net.convs) {
    views.push_back({c.name + ".weight", conv_shape(c), c.weight});
    views.push_back({c.name + ".bias", {c.out_channels}, c.bias});
  }
  return views;
}

std::vector<TensorView> tensor_views(const DecoderWeights& w) {
  std::vector<TensorView> views;
  for (const auto& c : w.net.convs) {
    views.push_back({c.name + ".weight", conv_shape(c), c.weight});
    views.push_back({c.name + ".bias", {c.out_channels}, c.bias});
  }
  return views;
}

std::vector<TensorView> tensor_views(const CbamWeights& w) {
  return {
      {"cbam.fc1.weight", {w.hidden, w.channels}, w.fc1_weight},
      {"cbam.fc1.bias", {w.hidden}, w.fc1_bias},
      {"cbam.fc2.weight", {w.channels, w.hidden}, w.fc2_weight},
      {"cbam.fc2.bias", {w.channels}, w.fc2_bias},
      {"cbam.spatial.weight", conv_shape(w.spatial), w.spatial.weight},
      {"cbam.spatial.bias", {1}, w.spatial.bias},
  };
}

std::vector<TensorView> tensor_views(const StyleNetWeights& w) {
  std::vector<TensorView> views = tensor_views(w.encoder);
  for (auto& v : tensor_views(w.cbam)) views.push_back(std::move(v));
  for (auto& v : tensor_views(w.decoder)) views.push_back(std::move(v));
  return views;
}

namespace {
void load_convs(const WeightContainer& c, std::vector<Conv2d>& convs) {
  for (auto& conv : convs) {
    conv.weight = c.get(conv.name + ".weight", conv_shape(conv));
    conv.bias = c.get(conv.name + ".bias", {conv.out_channels});
  }
}
}  // namespace

void load_from(const WeightContainer& c, EncoderWeights& w) { load_convs(c, w.net.convs); }
void load_from(const WeightContainer& c, DecoderWeights& w) { load_convs(c, w.net.convs); }

void load_from(const WeightContainer& c, CbamWeights& w) {
  w.fc1_weight = c.get("cbam.fc1.weight", {w.hidden, w.channels});
  w.fc1_bias = c.get("cbam.fc1.bias", {w.hidden});
  w.fc2_weight = c.get("cbam.fc2.weight", {w.channels, w.hidden});
  w.fc2_bias = c.get("cbam.fc2.bias", {w.channels});
  w.spatial.weight = c.get("cbam.spatial.weight", conv_shape(w.spatial));
  w.spatial.bias = c.get("cbam.spatial.bias", {1});
}

FeatureMap encode(const Image& img, const EncoderWeights& w) {
  require_rgb(img);
  return nn::forward(w.net, image_to_feature(img));
}

std::vector<FeatureMap> encode_taps(const Image& img, const EncoderWeights& w) {
  require_rgb(img);
  std::vector<FeatureMap> taps;
  nn::forward(w.net, image_to_feature(img), nullptr, &taps);
  return taps;
}

CbamGrads CbamGrads::zeros(const CbamWeights& w) {
  CbamGrads g;
  g.fc1_weight.assign(w.fc1_weight.size(), 0.0f);
  g.fc1_bias.assign(w.fc1_bias.size(), 0.0f);
  g.fc2_weight.assign(w.fc2_weight.size(), 0.0f);
  g.fc2_bias.assign(w.fc2_bias.size(), 0.0f);
  g.spatial = nn::zero_grad(w.spatial);
  return g;
}

namespace {

// Shared MLP: out = W2·relu(W1·v + b1) + b2. Records the hidden pre-activation.
std::vector<float> mlp(const CbamWeights& w, const std::vector<float>& v,
                       std::vector<float>& hidden) {
  hidden.assign(w.hidden, 0.0f);
  for (int j = 0; j < w.hidden; ++j) {
    double s = w.fc1_bias[j];
    for (int c = 0; c < w.channels; ++c) s += static_cast<double>(w.fc1_weight[j * w.channels + c]) * v[c];
    hidden[j] = static_cast<float>(s);
  }
  std::vector<float> out(w.channels);
  for (int c = 0; c < w.channels; ++c) {
    double s = w.fc2_bias[c];
    for (int j = 0; j < w.hidden; ++j) {
      const float r = hidden[j] > 0.0f ? hidden[j] : 0.0f;
      s += static_cast<double>(w.fc2_weight[c * w.hidden + j]) * r;
    }
    out[c] = static_cast<float>(s);
  }
  return out;
}

// Backprop of mlp for one descriptor; returns dL/dv and accumulates parameter grads.
std::vector<float> mlp_backward(const CbamWeights& w, const std::vector<float>& v,
                                const std::vector<float>& hidden, const std::vector<float>& grad,
                                CbamGrads* grads) {
  std::vector<float> dh(w.hidden, 0.0f);
  for (int j = 0; j < w.hidden; ++j) {
    const float r = hidden[j] > 0.0f ? hidden[j] : 0.0f;
    double s = 0.0;
    for (int c = 0; c < w.channels; ++c) {
      s += static_cast<double>(w.fc2_weight[c * w.hidden + j]) * grad[c];
      if (grads) grads->fc2_weight[c * w.hidden + j] += grad[c] * r;
    }
    dh[j] = hidden[j] > 0.0f ? static_cast<float>(s) : 0.0f;
  }
  if (grads) {
    for (int c = 0; c < w.channels; ++c) grads->fc2_bias[c] += grad[c];
    for (int j = 0; j < w.hidden; ++j) {
      grads->fc1_bias[j] += dh[j];
      for (int c = 0; c < w.channels; ++c) grads->fc1_weight[j * w.channels + c] += dh[j] * v[c];
    }
  }
  std::vector<float> dv(w.channels, 0.0f);
  for (int c = 0; c < w.channels; ++c) {
    double s = 0.0;
    for (int j = 0; j < w.hidden; ++j) s += static_cast<double>(w.fc1_weight[j * w.channels + c]) * dh[j];
    dv[c] = static_cast<float>(s);
  }
  return dv;
}

}  // namespace

FeatureMap cbam_refine(const FeatureMap& fm, const CbamWeights& w, CbamTrace* trace) {
  if (fm.channels() != w.channels) {
    throw Error("cbam: expected " + std::to_string(w.channels) + " channels, got " +
                std::to_string(fm.channels()));
  }
  if (fm.plane() < 1) throw Error("cbam: empty feature map");
  const int C = fm.channels();
  const int S = fm.plane();

  CbamTrace local;
  CbamTrace& t = trace ? *trace : local;
  t.input = fm;
  t.avg.assign(C, 0.0f);
  t.max.assign(C, 0.0f);
  t.max_index.assign(C, 0);
  for (int c = 0; c < C; ++c) {
    const float* p = fm.channel(c);
    double s = 0.0;
    int best = 0;
    for (int i = 0; i < S; ++i) {
      s += p[i];
      if (p[i] > p[best]) best = i;
    }
    t.avg[c] = static_cast<float>(s / S);
    t.max[c] = p[best];
    t.max_index[c] = best;
  }
  const auto a_avg = mlp(w, t.avg, t.hidden_avg);
  const auto a_max = mlp(w, t.max, t.hidden_max);
  t.channel_mask.resize(C);
  for (int c = 0; c < C; ++c) t.channel_mask[c] = nn::sigmoid(a_avg[c] + a_max[c]);

  t.gated = FeatureMap(C, fm.height(), fm.width());
  for (int c = 0; c < C; ++c) {
    const float* src = fm.channel(c);
    float* dst = t.gated.channel(c);
    for (int i = 0; i < S; ++i) dst[i] = src[i] * t.channel_mask[c];
  }

  t.pooled = FeatureMap(2, fm.height(), fm.width());
  t.pooled_max_index.assign(S, 0);
  for (int i = 0; i < S; ++i) {
    double s = 0.0;
    int best = 0;
    for (int c = 0; c < C; ++c) {
      const float v = t.gated.channel(c)[i];
      s += v;
      if (v > t.gated.channel(best)[i]) best = c;
    }
    t.pooled.channel(0)[i] = static_cast<float>(s / C);
    t.pooled.channel(1)[i] = t.gated.channel(best)[i];
    t.pooled_max_index[i] = best;
  }
  t.spatial_mask = nn::conv2d(t.pooled, w.spatial);
  for (float& v : t.spatial_mask.data()) v = nn::sigmoid(v);

  FeatureMap out(C, fm.height(), fm.width(), 0.0f, fm.tap());
  const float* ms = t.spatial_mask.channel(0);
  for (int c = 0; c < C; ++c) {
    const float* g = t.gated.channel(c);
    float* dst = out.channel(c);
    for (int i = 0; i < S; ++i) dst[i] = g[i] * ms[i];
  }
  return out;
}

FeatureMap cbam_backward(const CbamTrace& t, const CbamWeights& w, const FeatureMap& grad_out,
                         CbamGrads* grads) {
  const FeatureMap& x = t.input;
  if (!grad_out.same_shape(x)) throw Error("cbam_backward: gradient shape mismatch");
  const int C = x.channels();
  const int S = x.plane();
  const float* ms = t.spatial_mask.channel(0);

  // Through out = gated ⊙ Ms.
  FeatureMap d_gated(C, x.height(), x.width());
  FeatureMap d_z(1, x.height(), x.width());
  for (int c = 0; c < C; ++c) {
    const float* g = grad_out.channel(c);
    const float* gv = t.gated.channel(c);
    float* dg = d_gated.channel(c);
    for (int i = 0; i < S; ++i) {
      dg[i] = g[i] * ms[i];
      d_z.channel(0)[i] += g[i] * gv[i];
    }
  }
  for (int i = 0; i < S; ++i) d_z.channel(0)[i] *= ms[i] * (1.0f - ms[i]);

  const FeatureMap d_pooled =
      nn::conv2d_backward(t.pooled, w.spatial, d_z, grads ? &grads->spatial : nullptr);
  for (int i = 0; i < S; ++i) {
    const float dmean = d_pooled.channel(0)[i] / static_cast<float>(C);
    for (int c = 0; c < C; ++c) d_gated.channel(c)[i] += dmean;
    d_gated.channel(t.pooled_max_index[i])[i] += d_pooled.channel(1)[i];
  }

  // Through gated = x ⊙ Mc.
  FeatureMap dx(C, x.height(), x.width());
  std::vector<float> d_logit(C, 0.0f);
  for (int c = 0; c < C; ++c) {
    const float* dg = d_gated.channel(c);
    const float* xv = x.channel(c);
    float* d = dx.channel(c);
    double s = 0.0;
    for (int i = 0; i < S; ++i) {
      d[i] = dg[i] * t.channel_mask[c];
      s += static_cast<double>(dg[i]) * xv[i];
    }
    const float m = t.channel_mask[c];
    d_logit[c] = static_cast<float>(s) * m * (1.0f - m);
  }
  const auto d_avg = mlp_backward(w, t.avg, t.hidden_avg, d_logit, grads);
  const auto d_max = mlp_backward(w, t.max, t.hidden_max, d_logit, grads);
  for (int c = 0; c < C; ++c) {
    float* d = dx.channel(c);
    const float share = d_avg[c] / static_cast<float>(S);
    for (int i = 0; i < S; ++i) d[i] += share;
    d[t.max_index[c]] += d_max[c];
  }
  return dx;
}

FeatureMap adain(const FeatureMap& content, const FeatureMap& style, double eps) {
  if (content.channels() != style.channels()) {
    throw Error("adain: channel mismatch (" + std::to_string(content.channels()) + " vs " +
                std::to_string(style.channels()) + ")");
  }
  const ChannelStats cs = channel_stats(content, eps);
  const ChannelStats ss = channel_stats(style, eps);
  FeatureMap out(content.channels(), content.height(), content.width(), 0.0f, content.tap());
  for (int c = 0; c < content.channels(); ++c) {
    const float* src = content.channel(c);
    float* dst = out.channel(c);
    const double scale = ss.std[c] / cs.std[c];
    for (int i = 0; i < content.plane(); ++i) {
      dst[i] = static_cast<float>((src[i] - cs.mean[c]) * scale + ss.mean[c]);
    }
  }
  return out;
}

FeatureMap adain_backward(const FeatureMap& content, const FeatureMap& style,
                          const FeatureMap& grad_out, double eps) {
  if (!grad_out.same_shape(content)) throw Error("adain_backward: gradient shape mismatch");
  const ChannelStats cs = channel_stats(content, eps);
  const ChannelStats ss = channel_stats(style, eps);
  const int n = content.plane();
  FeatureMap dx(content.channels(), content.height(), content.width());
  for (int c = 0; c < content.channels(); ++c) {
    const float* x = content.channel(c);
    const float* g = grad_out.channel(c);
    float* d = dx.channel(c);
    const double inv_std = 1.0 / cs.std[c];
    // With n̂ = (x − μ)/σ and dn̂ = σ_s·g: dx = (dn̂ − mean(dn̂) − n̂·mean(dn̂·n̂)) / σ.
    double mean_dn = 0.0;
    double mean_dn_n = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dn = ss.std[c] * g[i];
      mean_dn += dn;
      mean_dn_n += dn * (x[i] - cs.mean[c]) * inv_std;
    }
    mean_dn /= n;
    mean_dn_n /= n;
    for (int i = 0; i < n; ++i) {
      const double nhat = (x[i] - cs.mean[c]) * inv_std;
      d[i] = static_cast<float>((ss.std[c] * g[i] - mean_dn - nhat * mean_dn_n) * inv_std);
    }
  }
  return dx;
}

FeatureMap fuse(const FeatureMap& adacs, const FeatureMap& edge_fm, float edge_weight) {
  if (!adacs.same_shape(edge_fm)) {
    throw Error("fuse: shape mismatch (" + adacs.shape_string() + " vs " + edge_fm.shape_string() +
                ")");
  }
  FeatureMap out = adacs;
  auto d = out.data();
  auto e = edge_fm.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += edge_weight * e[i];
  return out;
}

Image decode(const FeatureMap& fm, const DecoderWeights& w) {
  if (w.net.convs.empty() || fm.channels() != w.net.convs.front().in_channels) {
    throw Error("decode: feature channels do not match the decoder input");
  }
  return feature_to_image(nn::forward(w.net, fm));
}

Image stylize(const Image& content, const Image& style, const EdgeMap& edge,
              const StyleNetWeights& weights, const StylizeConfig& cfg) {
  if (edge.strength.height() != content.height() || edge.strength.width() != content.width()) {
    throw Error("edge map size mismatch");
  }
  const PaddedImage c = pad_to_multiple(to_rgb(content), 8);
  const PaddedImage s = pad_to_multiple(to_rgb(style), 8);
  const PaddedImage e = pad_to_multiple(to_rgb(edge.strength), 8);

  const FeatureMap fc = encode(c.image, weights.encoder);
  const FeatureMap fs = encode(s.image, weights.encoder);
  const FeatureMap fe = encode(e.image, weights.encoder);
  const FeatureMap adacs = adain(cbam_refine(fc, weights.cbam), fs);
  const Image out = decode(fuse(adacs, fe, cfg.edge_weight), weights.decoder);
  if (out.height() == c.height && out.width() == c.width) return out;
  return crop(out, {0, 0}, c.height, c.width);
}

}  // namespace edgeadain
