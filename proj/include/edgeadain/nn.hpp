#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "edgeadain/image.hpp"

namespace edgeadain::nn {

enum class Padding { reflect, zero };

/// Square-kernel, stride-1, "same" convolution. Weight layout out×in×k×k.
struct Conv2d {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  Padding padding = Padding::reflect;
  std::vector<float> weight;
  std::vector<float> bias;

  Conv2d() = default;
  Conv2d(std::string name, int in, int out, int kernel, Padding padding);
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }
};

struct ConvGrad {
  std::vector<float> weight;
  std::vector<float> bias;
};

ConvGrad zero_grad(const Conv2d& conv);

FeatureMap conv2d(const FeatureMap& x, const Conv2d& conv);

/// Returns dL/dx. Adds dL/dW and dL/db into `grad` when it is non-null.
FeatureMap conv2d_backward(const FeatureMap& x, const Conv2d& conv, const FeatureMap& grad_out,
                           ConvGrad* grad);

FeatureMap relu(const FeatureMap& x);
FeatureMap relu_backward(const FeatureMap& x, const FeatureMap& grad_out);

FeatureMap leaky_relu(const FeatureMap& x, float slope);
FeatureMap leaky_relu_backward(const FeatureMap& x, const FeatureMap& grad_out, float slope);

/// 2×2 stride-2 max pooling; records the flat input index of each winner.
FeatureMap max_pool2(const FeatureMap& x, std::vector<int>* argmax = nullptr);
FeatureMap max_pool2_backward(const FeatureMap& x, const std::vector<int>& argmax,
                              const FeatureMap& grad_out);

/// Nearest-neighbour ×2 upsampling.
FeatureMap upsample2(const FeatureMap& x);
FeatureMap upsample2_backward(const FeatureMap& grad_out);

enum class OpKind { conv, relu, leaky_relu, max_pool, upsample };

struct Op {
  OpKind kind;
  int conv = -1;         // index into Network::convs for OpKind::conv
  Tap tap = Tap::none;   // activation after this op is exposed as a tap
};

/// A straight chain of layers, used for both the encoder and the decoder.
struct Network {
  std::vector<Op> ops;
  std::vector<Conv2d> convs;
  float leaky_slope = 0.01f;
};

/// Per-op inputs recorded during a forward pass for use by backward().
struct Trace {
  std::vector<FeatureMap> inputs;
  std::vector<std::vector<int>> argmax;
};

/// Runs the chain. If `taps` is non-null it receives tap activations in chain order.
FeatureMap forward(const Network& net, const FeatureMap& x, Trace* trace = nullptr,
                   std::vector<FeatureMap>* taps = nullptr);

/// Backpropagates through a recorded trace. `grad_output` may be empty (no
/// gradient at the chain output); `tap_grads` (in chain tap order, may be empty
/// or contain empty maps) are injected where the taps were produced. Returns
/// dL/dinput; conv parameter gradients are accumulated into `grads` when non-null.
FeatureMap backward(const Network& net, const Trace& trace, const FeatureMap& grad_output,
                    std::span<const FeatureMap> tap_grads, std::vector<ConvGrad>* grads);

std::vector<ConvGrad> zero_grads(const Network& net);

inline float sigmoid(float v) { return 1.0f / (1.0f + std::exp(-v)); }

}  // namespace edgeadain::nn
