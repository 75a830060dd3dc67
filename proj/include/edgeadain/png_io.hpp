#pragma once

#include <filesystem>

#include "edgeadain/image.hpp"

namespace edgeadain {

/// Reads an 8-bit gray or RGB PNG (alpha is dropped, 16-bit is reduced) into [0,1].
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG; values are clamped to [0,1] and rounded half-up.
void write_png(const std::filesystem::path& path, const Image& img);

/// Masks are stored as 8-bit gray PNG with 255 for foreground. Reading treats values >= 128 as foreground.
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

/// Prediction in green drawn over ground truth in white.
Image overlay(const BinaryMask& pred, const BinaryMask& gt);

Image mask_to_image(const BinaryMask& mask);

inline std::uint8_t to_byte(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<std::uint8_t>(static_cast<int>(c * 255.0f + 0.5f));
}

}  // namespace edgeadain
