#include "edgeadain/png_io.hpp"

#include <png.h>

#include <string>

namespace edgeadain {

Image read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error("cannot decode PNG " + path.string() + ": " + msg);
  }
  std::vector<float> data(buffer.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) data[i] = static_cast<float>(buffer[i] / 255.0);
  return Image(static_cast<int>(image.height), static_cast<int>(image.width), channels,
               std::move(data));
}

void write_png(const std::filesystem::path& path, const Image& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(img.size());
  auto src = img.data();
  for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = to_byte(src[i]);
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + image.message);
  }
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const Image img = to_gray(read_png(path));
  BinaryMask mask(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) mask.set(y, x, img.at(y, x) >= 128.0f / 255.0f);
  return mask;
}

Image mask_to_image(const BinaryMask& mask) {
  Image img(mask.height(), mask.width(), 1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) img.at(y, x) = mask.at(y, x) ? 1.0f : 0.0f;
  return img;
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  write_png(path, mask_to_image(mask));
}

Image overlay(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw Error("overlay: mask size mismatch");
  }
  Image img(pred.height(), pred.width(), 3, 0.0f);
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (pred.at(y, x)) {
        img.at(y, x, 1) = 1.0f;
      } else if (gt.at(y, x)) {
        img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = 1.0f;
      }
    }
  }
  return img;
}

}  // namespace edgeadain
