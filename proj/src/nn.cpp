#include "edgeadain/nn.hpp"

#include <Eigen/Core>
#include <algorithm>

namespace edgeadain::nn {
namespace {

using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;
using MatMap = Eigen::Map<RowMajor>;
using StridedMap = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;

// Keeps one im2col block around 16 MiB.
constexpr std::size_t kColBudget = std::size_t{4} << 20;

int rows_per_block(const Conv2d& conv, int width, int height) {
  const std::size_t per_row =
      static_cast<std::size_t>(conv.in_channels) * conv.kernel * conv.kernel * width;
  return static_cast<int>(std::clamp<std::size_t>(kColBudget / std::max<std::size_t>(per_row, 1),
                                                   1, static_cast<std::size_t>(height)));
}

// Source index for a tap at (y, x); -1 means a zero-padded sample.
inline int source_index(int y, int x, int h, int w, Padding padding) {
  if (padding == Padding::reflect) return reflect_index(y, h) * w + reflect_index(x, w);
  if (y < 0 || y >= h || x < 0 || x >= w) return -1;
  return y * w + x;
}

void im2col(const FeatureMap& x, const Conv2d& conv, int r0, int r1, std::vector<float>& col) {
  const int h = x.height();
  const int w = x.width();
  const int k = conv.kernel;
  const int pad = k / 2;
  const int cols = (r1 - r0) * w;
  col.resize(static_cast<std::size_t>(conv.in_channels) * k * k * cols);
  for (int c = 0; c < conv.in_channels; ++c) {
    const float* src = x.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        float* dst = col.data() + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
        for (int y = r0; y < r1; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const int idx = source_index(y + ky - pad, xx + kx - pad, h, w, conv.padding);
            *dst++ = idx < 0 ? 0.0f : src[idx];
          }
        }
      }
    }
  }
}

void col2im_add(const std::vector<float>& col, const Conv2d& conv, int r0, int r1,
                FeatureMap& dx) {
  const int h = dx.height();
  const int w = dx.width();
  const int k = conv.kernel;
  const int pad = k / 2;
  const int cols = (r1 - r0) * w;
  for (int c = 0; c < conv.in_channels; ++c) {
    float* dst = dx.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const float* src = col.data() + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
        for (int y = r0; y < r1; ++y) {
          for (int xx = 0; xx < w; ++xx) {
            const int idx = source_index(y + ky - pad, xx + kx - pad, h, w, conv.padding);
            const float g = *src++;
            if (idx >= 0) dst[idx] += g;
          }
        }
      }
    }
  }
}

void check_input(const FeatureMap& x, const Conv2d& conv) {
  if (x.channels() != conv.in_channels) {
    throw Error("conv " + conv.name + ": expected " + std::to_string(conv.in_channels) +
                " input channels, got " + std::to_string(x.channels()));
  }
  if (conv.weight.size() != conv.weight_count() ||
      conv.bias.size() != static_cast<std::size_t>(conv.out_channels)) {
    throw Error("conv " + conv.name + ": parameter shape mismatch");
  }
}

}  // namespace

Conv2d::Conv2d(std::string name_, int in, int out, int kernel_, Padding padding_)
    : name(std::move(name_)),
      in_channels(in),
      out_channels(out),
      kernel(kernel_),
      padding(padding_),
      weight(weight_count(), 0.0f),
      bias(static_cast<std::size_t>(out), 0.0f) {}

ConvGrad zero_grad(const Conv2d& conv) {
  return {std::vector<float>(conv.weight.size(), 0.0f), std::vector<float>(conv.bias.size(), 0.0f)};
}

FeatureMap conv2d(const FeatureMap& x, const Conv2d& conv) {
  check_input(x, conv);
  const int h = x.height();
  const int w = x.width();
  const int hw = h * w;
  const int kk = conv.in_channels * conv.kernel * conv.kernel;
  FeatureMap out(conv.out_channels, h, w);
  ConstMatMap weights(conv.weight.data(), conv.out_channels, kk);
  std::vector<float> col;
  const int block = rows_per_block(conv, w, h);
  for (int r0 = 0; r0 < h; r0 += block) {
    const int r1 = std::min(h, r0 + block);
    const int cols = (r1 - r0) * w;
    im2col(x, conv, r0, r1, col);
    ConstMatMap colm(col.data(), kk, cols);
    StridedMap dst(out.data().data() + static_cast<std::size_t>(r0) * w, conv.out_channels, cols,
                   Eigen::OuterStride<>(hw));
    dst.noalias() = weights * colm;
  }
  for (int o = 0; o < conv.out_channels; ++o) {
    float* p = out.channel(o);
    const float b = conv.bias[o];
    for (int i = 0; i < hw; ++i) p[i] += b;
  }
  return out;
}

FeatureMap conv2d_backward(const FeatureMap& x, const Conv2d& conv, const FeatureMap& grad_out,
                           ConvGrad* grad) {
  check_input(x, conv);
  if (grad_out.channels() != conv.out_channels || grad_out.height() != x.height() ||
      grad_out.width() != x.width()) {
    throw Error("conv " + conv.name + ": gradient shape mismatch");
  }
  const int h = x.height();
  const int w = x.width();
  const int hw = h * w;
  const int kk = conv.in_channels * conv.kernel * conv.kernel;
  FeatureMap dx(conv.in_channels, h, w);
  ConstMatMap weights(conv.weight.data(), conv.out_channels, kk);
  std::vector<float> col;
  std::vector<float> dcol;
  const int block = rows_per_block(conv, w, h);
  for (int r0 = 0; r0 < h; r0 += block) {
    const int r1 = std::min(h, r0 + block);
    const int cols = (r1 - r0) * w;
    ConstStridedMap g(grad_out.data().data() + static_cast<std::size_t>(r0) * w,
                      conv.out_channels, cols, Eigen::OuterStride<>(hw));
    if (grad) {
      im2col(x, conv, r0, r1, col);
      ConstMatMap colm(col.data(), kk, cols);
      MatMap dw(grad->weight.data(), conv.out_channels, kk);
      dw.noalias() += g * colm.transpose();
    }
    dcol.resize(static_cast<std::size_t>(kk) * cols);
    MatMap dcolm(dcol.data(), kk, cols);
    dcolm.noalias() = weights.transpose() * g;
    col2im_add(dcol, conv, r0, r1, dx);
  }
  if (grad) {
    for (int o = 0; o < conv.out_channels; ++o) {
      const float* p = grad_out.channel(o);
      double s = 0.0;
      for (int i = 0; i < hw; ++i) s += p[i];
      grad->bias[o] += static_cast<float>(s);
    }
  }
  return dx;
}

FeatureMap relu(const FeatureMap& x) {
  FeatureMap out = x;
  for (float& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

FeatureMap relu_backward(const FeatureMap& x, const FeatureMap& grad_out) {
  FeatureMap dx = grad_out;
  auto xs = x.data();
  auto d = dx.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(xs[i] > 0.0f)) d[i] = 0.0f;
  return dx;
}

FeatureMap leaky_relu(const FeatureMap& x, float slope) {
  FeatureMap out = x;
  for (float& v : out.data()) v = v > 0.0f ? v : v * slope;
  return out;
}

FeatureMap leaky_relu_backward(const FeatureMap& x, const FeatureMap& grad_out, float slope) {
  FeatureMap dx = grad_out;
  auto xs = x.data();
  auto d = dx.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!(xs[i] > 0.0f)) d[i] *= slope;
  return dx;
}

FeatureMap max_pool2(const FeatureMap& x, std::vector<int>* argmax) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) throw Error("max_pool2 requires even dimensions");
  const int oh = x.height() / 2;
  const int ow = x.width() / 2;
  FeatureMap out(x.channels(), oh, ow);
  if (argmax) argmax->resize(out.size());
  std::size_t o = 0;
  for (int c = 0; c < x.channels(); ++c) {
    const float* src = x.channel(c);
    const int base = c * x.plane();
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx, ++o) {
        int best = (2 * y) * x.width() + 2 * xx;
        for (int idx : {best + 1, best + x.width(), best + x.width() + 1}) {
          if (src[idx] > src[best]) best = idx;
        }
        out.data()[o] = src[best];
        if (argmax) (*argmax)[o] = base + best;
      }
    }
  }
  return out;
}

FeatureMap max_pool2_backward(const FeatureMap& x, const std::vector<int>& argmax,
                              const FeatureMap& grad_out) {
  FeatureMap dx(x.channels(), x.height(), x.width());
  auto g = grad_out.data();
  for (std::size_t i = 0; i < g.size(); ++i) dx.data()[argmax[i]] += g[i];
  return dx;
}

FeatureMap upsample2(const FeatureMap& x) {
  FeatureMap out(x.channels(), x.height() * 2, x.width() * 2);
  for (int c = 0; c < x.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int xx = 0; xx < out.width(); ++xx) out.at(c, y, xx) = x.at(c, y / 2, xx / 2);
  return out;
}

FeatureMap upsample2_backward(const FeatureMap& grad_out) {
  FeatureMap dx(grad_out.channels(), grad_out.height() / 2, grad_out.width() / 2);
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int y = 0; y < grad_out.height(); ++y)
      for (int x = 0; x < grad_out.width(); ++x) dx.at(c, y / 2, x / 2) += grad_out.at(c, y, x);
  return dx;
}

std::vector<ConvGrad> zero_grads(const Network& net) {
  std::vector<ConvGrad> grads;
  grads.reserve(net.convs.size());
  for (const auto& conv : net.convs) grads.push_back(zero_grad(conv));
  return grads;
}

FeatureMap forward(const Network& net, const FeatureMap& x, Trace* trace,
                   std::vector<FeatureMap>* taps) {
  if (trace) {
    trace->inputs.clear();
    trace->argmax.assign(net.ops.size(), {});
  }
  if (taps) taps->clear();
  FeatureMap cur = x;
  for (std::size_t i = 0; i < net.ops.size(); ++i) {
    const Op& op = net.ops[i];
    if (trace) trace->inputs.push_back(cur);
    switch (op.kind) {
      case OpKind::conv: cur = conv2d(cur, net.convs[op.conv]); break;
      case OpKind::relu: cur = relu(cur); break;
      case OpKind::leaky_relu: cur = leaky_relu(cur, net.leaky_slope); break;
      case OpKind::max_pool: cur = max_pool2(cur, trace ? &trace->argmax[i] : nullptr); break;
      case OpKind::upsample: cur = upsample2(cur); break;
    }
    if (op.tap != Tap::none) {
      cur.set_tap(op.tap);
      if (taps) taps->push_back(cur);
    }
  }
  return cur;
}

FeatureMap backward(const Network& net, const Trace& trace, const FeatureMap& grad_output,
                    std::span<const FeatureMap> tap_grads, std::vector<ConvGrad>* grads) {
  if (trace.inputs.size() != net.ops.size()) throw Error("backward: trace does not match network");
  int tap_index = 0;
  for (const Op& op : net.ops)
    if (op.tap != Tap::none) ++tap_index;

  FeatureMap grad = grad_output;
  bool have_grad = grad.size() > 0;
  for (std::size_t i = net.ops.size(); i-- > 0;) {
    const Op& op = net.ops[i];
    const FeatureMap& input = trace.inputs[i];
    if (op.tap != Tap::none) {
      --tap_index;
      if (tap_index < static_cast<int>(tap_grads.size()) && tap_grads[tap_index].size() > 0) {
        const FeatureMap& tg = tap_grads[tap_index];
        if (!have_grad) {
          grad = tg;
          have_grad = true;
        } else {
          if (!grad.same_shape(tg)) throw Error("backward: tap gradient shape mismatch");
          auto d = grad.data();
          auto s = tg.data();
          for (std::size_t j = 0; j < d.size(); ++j) d[j] += s[j];
        }
      }
    }
    if (!have_grad) continue;
    switch (op.kind) {
      case OpKind::conv:
        grad = conv2d_backward(input, net.convs[op.conv], grad,
                               grads ? &(*grads)[op.conv] : nullptr);
        break;
      case OpKind::relu: grad = relu_backward(input, grad); break;
      case OpKind::leaky_relu: grad = leaky_relu_backward(input, grad, net.leaky_slope); break;
      case OpKind::max_pool: grad = max_pool2_backward(input, trace.argmax[i], grad); break;
      case OpKind::upsample: grad = upsample2_backward(grad); break;
    }
  }
  if (!have_grad) return FeatureMap(trace.inputs.front().channels(), trace.inputs.front().height(),
                                    trace.inputs.front().width());
  return grad;
}

}  // namespace edgeadain::nn
