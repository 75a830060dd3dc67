#pragma once

#include <span>
#include <vector>

#include "edgeadain/image.hpp"

namespace edgeadain {

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.05;
  double gamma = 0.05;
};

struct LossReport {
  double content = 0.0;
  double style = 0.0;
  double edge = 0.0;
  double total = 0.0;
};

/// Mean squared difference over all elements.
double content_loss(const FeatureMap& output, const FeatureMap& target);
FeatureMap content_loss_grad(const FeatureMap& output, const FeatureMap& target);

/// Σ over taps of MSE(μ_out, μ_style) + MSE(σ_out, σ_style).
double style_loss(std::span<const FeatureMap> output_taps, std::span<const FeatureMap> style_taps,
                  double eps = kStatsEps);
std::vector<FeatureMap> style_loss_grad(std::span<const FeatureMap> output_taps,
                                        std::span<const FeatureMap> style_taps,
                                        double eps = kStatsEps);

/// Σ over taps of the elementwise MSE between output and edge-image activations.
double edge_loss(std::span<const FeatureMap> output_taps, std::span<const FeatureMap> edge_taps);
std::vector<FeatureMap> edge_loss_grad(std::span<const FeatureMap> output_taps,
                                       std::span<const FeatureMap> edge_taps);

/// total = α·content + β·style + γ·edge. Non-finite terms are rejected by name.
LossReport total_loss(double content, double style, double edge, const LossWeights& w);

}  // namespace edgeadain
