#pragma once

#include <utility>
#include <vector>

#include "edgeadain/image.hpp"

namespace edgeadain {

/// Offsets (dy, dx) of a flat Euclidean disk: dy² + dx² <= r².
std::vector<std::pair<int, int>> disk_offsets(int radius);

// Flat-disk morphology on single-channel images. Samples outside the image are
// ignored (equivalent to padding with +inf for erosion and -inf for dilation),
// so opening stays anti-extensive and closing extensive up to the border.
Image erode(const Image& img, int radius);
Image dilate(const Image& img, int radius);
Image open(const Image& img, int radius);
Image close(const Image& img, int radius);

/// I - open(I); everywhere >= 0.
Image white_tophat(const Image& img, int radius);
/// close(I) - I; everywhere >= 0.
Image black_tophat(const Image& img, int radius);

BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask open(const BinaryMask& mask, int radius);
BinaryMask close(const BinaryMask& mask, int radius);

/// 8-connected component labels (0 = background, 1..n in raster-scan order of first pixel).
struct Components {
  std::vector<int> labels;
  std::vector<int> sizes;  // sizes[k] is the pixel count of label k + 1
  int count() const { return static_cast<int>(sizes.size()); }
};

Components label_components(const BinaryMask& mask);

/// Removes 8-connected components with fewer than min_size pixels.
BinaryMask remove_small_components(const BinaryMask& mask, int min_size);

}  // namespace edgeadain
