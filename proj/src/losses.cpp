#include "edgeadain/losses.hpp"

#include <cmath>
#include <string>

namespace edgeadain {
namespace {

void require_same(const FeatureMap& a, const FeatureMap& b, const char* op) {
  if (!a.same_shape(b)) {
    throw Error(std::string(op) + ": shape mismatch (" + a.shape_string() + " vs " +
                b.shape_string() + ")");
  }
}

void require_pairs(std::span<const FeatureMap> a, std::span<const FeatureMap> b, const char* op) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(std::string(op) + ": tap list length mismatch");
  }
}

}  // namespace

double content_loss(const FeatureMap& output, const FeatureMap& target) {
  require_same(output, target, "content_loss");
  auto a = output.data();
  auto b = target.data();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

FeatureMap content_loss_grad(const FeatureMap& output, const FeatureMap& target) {
  require_same(output, target, "content_loss");
  FeatureMap g(output.channels(), output.height(), output.width(), 0.0f, output.tap());
  auto a = output.data();
  auto b = target.data();
  const double scale = 2.0 / static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    g.data()[i] = static_cast<float>(scale * (static_cast<double>(a[i]) - b[i]));
  }
  return g;
}

double style_loss(std::span<const FeatureMap> output_taps, std::span<const FeatureMap> style_taps,
                  double eps) {
  require_pairs(output_taps, style_taps, "style_loss");
  double total = 0.0;
  for (std::size_t t = 0; t < output_taps.size(); ++t) {
    if (output_taps[t].channels() != style_taps[t].channels()) {
      throw Error("style_loss: channel mismatch at tap " + std::to_string(t));
    }
    const ChannelStats o = channel_stats(output_taps[t], eps);
    const ChannelStats s = channel_stats(style_taps[t], eps);
    const int C = output_taps[t].channels();
    double mean_term = 0.0;
    double std_term = 0.0;
    for (int c = 0; c < C; ++c) {
      mean_term += (o.mean[c] - s.mean[c]) * (o.mean[c] - s.mean[c]);
      std_term += (o.std[c] - s.std[c]) * (o.std[c] - s.std[c]);
    }
    total += (mean_term + std_term) / C;
  }
  return total;
}

std::vector<FeatureMap> style_loss_grad(std::span<const FeatureMap> output_taps,
                                        std::span<const FeatureMap> style_taps, double eps) {
  require_pairs(output_taps, style_taps, "style_loss");
  std::vector<FeatureMap> grads;
  for (std::size_t t = 0; t < output_taps.size(); ++t) {
    const FeatureMap& x = output_taps[t];
    if (x.channels() != style_taps[t].channels()) {
      throw Error("style_loss: channel mismatch at tap " + std::to_string(t));
    }
    const ChannelStats o = channel_stats(x, eps);
    const ChannelStats s = channel_stats(style_taps[t], eps);
    const int C = x.channels();
    const int n = x.plane();
    FeatureMap g(C, x.height(), x.width(), 0.0f, x.tap());
    for (int c = 0; c < C; ++c) {
      // dμ/dx = 1/n, dσ/dx = (x − μ)/(n·σ).
      const double dmean = 2.0 * (o.mean[c] - s.mean[c]) / C / n;
      const double dstd = 2.0 * (o.std[c] - s.std[c]) / C / (n * o.std[c]);
      const float* xs = x.channel(c);
      float* gs = g.channel(c);
      for (int i = 0; i < n; ++i) gs[i] = static_cast<float>(dmean + dstd * (xs[i] - o.mean[c]));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double edge_loss(std::span<const FeatureMap> output_taps, std::span<const FeatureMap> edge_taps) {
  require_pairs(output_taps, edge_taps, "edge_loss");
  double total = 0.0;
  for (std::size_t t = 0; t < output_taps.size(); ++t) {
    total += content_loss(output_taps[t], edge_taps[t]);
  }
  return total;
}

std::vector<FeatureMap> edge_loss_grad(std::span<const FeatureMap> output_taps,
                                       std::span<const FeatureMap> edge_taps) {
  require_pairs(output_taps, edge_taps, "edge_loss");
  std::vector<FeatureMap> grads;
  for (std::size_t t = 0; t < output_taps.size(); ++t) {
    grads.push_back(content_loss_grad(output_taps[t], edge_taps[t]));
  }
  return grads;
}

LossReport total_loss(double content, double style, double edge, const LossWeights& w) {
  if (!std::isfinite(content)) throw Error("non-finite content loss");
  if (!std::isfinite(style)) throw Error("non-finite style loss");
  if (!std::isfinite(edge)) throw Error("non-finite edge loss");
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0) throw Error("loss weights must be >= 0");
  return {content, style, edge, w.alpha * content + w.beta * style + w.gamma * edge};
}

}  // namespace edgeadain
