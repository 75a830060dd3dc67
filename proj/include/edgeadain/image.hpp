#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace edgeadain {

/// Raised for every contract violation reported by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H×W×C float raster, channels-last, values nominally in [0,1]. C is 1 or 3.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);
  Image(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Encoder layers whose activations are exposed as feature taps.
enum class Tap { relu1_1, relu2_1, relu3_1, relu4_1, none };

const char* tap_name(Tap tap);

/// C×H×W float tensor, channels-first.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, float fill = 0.0f, Tap tap = Tap::none);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int plane() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  Tap tap() const { return tap_; }
  void set_tap(Tap tap) { tap_ = tap; }

  float& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  float at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  float* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * plane(); }
  const float* channel(int c) const {
    return data_.data() + static_cast<std::size_t>(c) * plane();
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const FeatureMap& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  std::string shape_string() const;

  // Tap is metadata; equality compares values only.
  friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  Tap tap_ = Tap::none;
  std::vector<float> data_;
};

/// Per-channel spatial mean and stabilized population std.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// H×W boolean raster. True is foreground (vessel).
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  bool at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int y, int x, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return data_[i] != 0; }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

inline constexpr double kStatsEps = 1e-5;

ChannelStats channel_stats(const FeatureMap& fm, double eps = kStatsEps);

/// BT.601 luma for RGB; a copy for gray input.
Image to_gray(const Image& img);

/// Replicates a gray image into three channels; RGB input is returned as is.
Image to_rgb(const Image& img);

Image clamp01(const Image& img);

struct CropOrigin {
  int y = 0;
  int x = 0;
};

/// Origin drawn by random_crop for the given geometry and seed.
CropOrigin crop_origin(int height, int width, int size, std::uint64_t seed);

Image crop(const Image& img, CropOrigin origin, int height, int width);

/// size×size subwindow at a seeded random origin.
Image random_crop(const Image& img, int size, std::uint64_t seed);

/// Bilinear resize (half-pixel centers).
Image resize_bilinear(const Image& img, int height, int width);

/// Upscales so that the shorter side equals min_side; returns the input when already large enough.
Image upscale_to_min_side(const Image& img, int min_side);

/// Reflect index into [0, n) without repeating the edge sample; n == 1 maps to 0.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

struct PaddedImage {
  Image image;
  int height = 0;  // original extent
  int width = 0;
};

/// Reflect-pads bottom/right so both dimensions become multiples of `multiple`.
PaddedImage pad_to_multiple(const Image& img, int multiple);

/// Conversions at the encoder/decoder boundary.
FeatureMap image_to_feature(const Image& img);
Image feature_to_image(const FeatureMap& fm);

/// Uniform integer in [0, n) from a 64-bit engine output; identical on every platform.
inline std::uint64_t bounded(std::uint64_t r, std::uint64_t n) { return r % n; }

/// Uniform double in [0, 1) from a 64-bit engine output.
inline double unit_interval(std::uint64_t r) {
  return static_cast<double>(r >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace edgeadain
