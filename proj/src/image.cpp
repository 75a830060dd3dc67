#include "edgeadain/image.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace edgeadain {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1) throw Error("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw Error("image must have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 1 || width < 1) throw Error("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw Error("image must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error("image data size does not match dimensions");
  }
}

const char* tap_name(Tap tap) {
  switch (tap) {
    case Tap::relu1_1: return "relu1_1";
    case Tap::relu2_1: return "relu2_1";
    case Tap::relu3_1: return "relu3_1";
    case Tap::relu4_1: return "relu4_1";
    case Tap::none: break;
  }
  return "none";
}

FeatureMap::FeatureMap(int channels, int height, int width, float fill, Tap tap)
    : channels_(channels), height_(height), width_(width), tap_(tap) {
  if (channels < 1 || height < 0 || width < 0) throw Error("invalid feature map shape");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::string FeatureMap::shape_string() const {
  std::ostringstream os;
  os << channels_ << "x" << height_ << "x" << width_;
  return os.str();
}

BinaryMask::BinaryMask(int height, int width, bool fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw Error("mask dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ChannelStats channel_stats(const FeatureMap& fm, double eps) {
  if (fm.plane() < 1) throw Error("empty feature map");
  if (!(eps > 0.0)) throw Error("channel_stats requires eps > 0");
  const int n = fm.plane();
  ChannelStats stats;
  stats.mean.resize(fm.channels());
  stats.std.resize(fm.channels());
  for (int c = 0; c < fm.channels(); ++c) {
    const float* p = fm.channel(c);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += p[i];
    const double mean = sum / n;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = p[i] - mean;
      sq += d * d;
    }
    stats.mean[c] = mean;
    stats.std[c] = std::sqrt(sq / n + eps);
  }
  return stats;
}

Image to_gray(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
  }
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.height(), img.width(), 3);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (float& v : out.data()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

CropOrigin crop_origin(int height, int width, int size, std::uint64_t seed) {
  if (size < 1) throw Error("crop size must be positive");
  if (height < size || width < size) throw Error("crop larger than image");
  std::mt19937_64 rng(seed);
  CropOrigin o;
  o.y = static_cast<int>(bounded(rng(), static_cast<std::uint64_t>(height - size + 1)));
  o.x = static_cast<int>(bounded(rng(), static_cast<std::uint64_t>(width - size + 1)));
  return o;
}

Image crop(const Image& img, CropOrigin origin, int height, int width) {
  if (origin.y < 0 || origin.x < 0 || origin.y + height > img.height() ||
      origin.x + width > img.width()) {
    throw Error("crop window outside image");
  }
  Image out(height, width, img.channels());
  const int c = img.channels();
  for (int y = 0; y < height; ++y) {
    const auto src = img.data().subspan(
        (static_cast<std::size_t>(origin.y + y) * img.width() + origin.x) * c,
        static_cast<std::size_t>(width) * c);
    std::copy(src.begin(), src.end(), &out.at(y, 0));
  }
  return out;
}

Image random_crop(const Image& img, int size, std::uint64_t seed) {
  return crop(img, crop_origin(img.height(), img.width(), size, seed), size, size);
}

Image resize_bilinear(const Image& img, int height, int width) {
  Image out(height, width, img.channels());
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels(); ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = static_cast<float>(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Image upscale_to_min_side(const Image& img, int min_side) {
  const int shorter = std::min(img.height(), img.width());
  if (shorter >= min_side) return img;
  const double scale = static_cast<double>(min_side) / shorter;
  const int h = std::max(min_side, static_cast<int>(std::ceil(img.height() * scale - 1e-9)));
  const int w = std::max(min_side, static_cast<int>(std::ceil(img.width() * scale - 1e-9)));
  return resize_bilinear(img, h, w);
}

PaddedImage pad_to_multiple(const Image& img, int multiple) {
  const int h = (img.height() + multiple - 1) / multiple * multiple;
  const int w = (img.width() + multiple - 1) / multiple * multiple;
  PaddedImage out{Image(h, w, img.channels()), img.height(), img.width()};
  for (int y = 0; y < h; ++y) {
    const int sy = reflect_index(y, img.height());
    for (int x = 0; x < w; ++x) {
      const int sx = reflect_index(x, img.width());
      for (int c = 0; c < img.channels(); ++c) out.image.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

FeatureMap image_to_feature(const Image& img) {
  FeatureMap fm(img.channels(), img.height(), img.width());
  for (int c = 0; c < img.channels(); ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) fm.at(c, y, x) = img.at(y, x, c);
  return fm;
}

Image feature_to_image(const FeatureMap& fm) {
  if (fm.channels() != 1 && fm.channels() != 3) throw Error("feature map is not image-shaped");
  Image img(fm.height(), fm.width(), fm.channels());
  for (int c = 0; c < fm.channels(); ++c)
    for (int y = 0; y < fm.height(); ++y)
      for (int x = 0; x < fm.width(); ++x) img.at(y, x, c) = fm.at(c, y, x);
  return img;
}

}  // namespace edgeadain
