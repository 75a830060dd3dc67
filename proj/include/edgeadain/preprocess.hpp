#pragma once

#include <vector>

#include "edgeadain/image.hpp"

namespace edgeadain {

struct PreprocessStages {
  bool median = true;
  bool nlm = true;
  bool tophat = true;
};

struct PreprocessConfig {
  int median_radius = 1;
  int nlm_patch = 7;
  int nlm_search = 21;
  float nlm_h = 0.08f;
  int nlm_neighbours = 16;
  std::vector<int> tophat_radii{3, 5, 7, 9};
  PreprocessStages stages;

  /// Throws Error naming the first violated field.
  void validate() const;
};

/// Median over a (2r+1)² window with reflect padding.
Image median_filter(const Image& gray, int radius);

/// Noise std estimated from the median absolute deviation of the 4-neighbour Laplacian residual.
double estimate_noise_sigma(const Image& gray);

/// Non-local means where each pixel averages only the K candidates whose patch
/// distance is closest to the distance expected between two noisy copies of
/// the same patch (2σ²).
Image nlm_snn(const Image& gray, int patch, int search, float h, int neighbours);

/// Median then NL-means, honouring the stage flags; output clamped to [0,1].
Image denoise(const Image& gray, const PreprocessConfig& cfg);

/// clamp(I + max_r WTH_r(I) - max_r BTH_r(I), 0, 1) with flat disks of the given radii.
Image tophat_enhance(const Image& gray, const std::vector<int>& radii);

/// Gray conversion, enabled stages in order median -> NL-means -> top-hat, then RGB replication.
Image preprocess(const Image& img, const PreprocessConfig& cfg);

}  // namespace edgeadain
