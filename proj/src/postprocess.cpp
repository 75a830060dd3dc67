#include "edgeadain/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "edgeadain/morphology.hpp"

namespace edgeadain {

void PostConfig::validate() const {
  if (!(fixed_threshold > 0.0f && fixed_threshold < 1.0f)) {
    throw Error("fixed_threshold must lie in (0,1)");
  }
  if (close_radius < 0 || open_radius < 0) throw Error("morphology radii must be >= 0");
  if (min_component < 0) throw Error("min_component must be >= 0");
}

int intensity_bin(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<int>(c * 255.0f + 0.5f);
}

int otsu_threshold(const Image& gray) {
  std::array<double, 256> hist{};
  for (float v : gray.data()) hist[intensity_bin(v)] += 1.0;
  const double total = static_cast<double>(gray.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int threshold = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = t;
    }
  }
  return threshold;
}

BinaryMask binarize(const Image& stylized, const PostConfig& cfg) {
  cfg.validate();
  const Image gray = to_gray(stylized);
  BinaryMask mask(gray.height(), gray.width());
  const auto [lo, hi] = std::minmax_element(gray.data().begin(), gray.data().end());
  if (intensity_bin(*lo) == intensity_bin(*hi)) return mask;

  const int threshold = cfg.threshold_mode == ThresholdMode::otsu
                            ? otsu_threshold(gray)
                            : intensity_bin(cfg.fixed_threshold);
  // Fixed thresholds compare raw intensities; Otsu compares histogram bins.
  auto bright = [&](float v) {
    return cfg.threshold_mode == ThresholdMode::otsu ? intensity_bin(v) > threshold
                                                     : v > cfg.fixed_threshold;
  };
  bool vessels_bright = cfg.polarity != Polarity::dark_strokes;
  if (cfg.polarity == Polarity::automatic) {
    std::size_t n_bright = 0;
    for (float v : gray.data()) n_bright += bright(v) ? 1 : 0;
    // Strokes are the minority side.
    vessels_bright = 2 * n_bright <= gray.size();
  }
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) mask.set(y, x, bright(gray.at(y, x)) == vessels_bright);
  return mask;
}

BinaryMask cleanup(const BinaryMask& mask, const PostConfig& cfg) {
  cfg.validate();
  BinaryMask out = mask;
  if (cfg.close_radius > 0) out = close(out, cfg.close_radius);
  if (cfg.open_radius > 0) out = open(out, cfg.open_radius);
  return remove_small_components(out, cfg.min_component);
}

}  // namespace edgeadain
