#pragma once

#include "edgeadain/image.hpp"

namespace edgeadain {

enum class ThresholdMode { otsu, fixed };
enum class Polarity { dark_strokes, bright_strokes, automatic };

struct PostConfig {
  ThresholdMode threshold_mode = ThresholdMode::otsu;
  float fixed_threshold = 0.5f;
  Polarity polarity = Polarity::automatic;
  int close_radius = 1;
  int open_radius = 1;
  int min_component = 30;

  void validate() const;
};

/// Histogram bin (0..255) of a [0,1] intensity.
int intensity_bin(float v);

/// Otsu threshold over a 256-bin histogram: pixels with bin > t form the bright class.
int otsu_threshold(const Image& gray);

/// Gray conversion, polarity resolution and thresholding. True = vessel.
BinaryMask binarize(const Image& stylized, const PostConfig& cfg);

/// Closing, opening, then removal of 8-connected components below min_component.
BinaryMask cleanup(const BinaryMask& mask, const PostConfig& cfg);

}  // namespace edgeadain
