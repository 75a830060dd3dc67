#include "edgeadain/morphology.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>

namespace edgeadain {
namespace {

int half_width(int radius, int dy) {
  int w = 0;
  while ((w + 1) * (w + 1) + dy * dy <= radius * radius) ++w;
  return w;
}

// Sliding-window extremum along rows with window [x - w, x + w] clipped to the row.
template <typename T, typename Better>
void row_filter(const std::vector<T>& src, std::vector<T>& dst, int height, int width, int w,
                Better better) {
  dst.resize(src.size());
  std::deque<int> window;
  for (int y = 0; y < height; ++y) {
    const T* row = src.data() + static_cast<std::size_t>(y) * width;
    T* out = dst.data() + static_cast<std::size_t>(y) * width;
    window.clear();
    int next = 0;
    for (int x = 0; x < width; ++x) {
      const int hi = std::min(width - 1, x + w);
      for (; next <= hi; ++next) {
        while (!window.empty() && !better(row[window.back()], row[next])) window.pop_back();
        window.push_back(next);
      }
      while (window.front() < x - w) window.pop_front();
      out[x] = row[window.front()];
    }
  }
}

// better(a, b) is true when a strictly beats b; for min filtering that is a < b.
template <typename T, typename Better>
std::vector<T> disk_filter(const std::vector<T>& src, int height, int width, int radius,
                           Better better) {
  if (radius <= 0) return src;
  std::vector<std::vector<T>> rows(radius + 1);
  for (int w = 0; w <= radius; ++w) row_filter(src, rows[w], height, width, w, better);
  std::vector<T> out(src.size());
  std::vector<int> widths(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) widths[dy + radius] = half_width(radius, dy);
  for (int y = 0; y < height; ++y) {
    T* dst = out.data() + static_cast<std::size_t>(y) * width;
    bool first = true;
    for (int dy = -radius; dy <= radius; ++dy) {
      const int yy = y + dy;
      if (yy < 0 || yy >= height) continue;
      const T* row = rows[widths[dy + radius]].data() + static_cast<std::size_t>(yy) * width;
      if (first) {
        std::copy(row, row + width, dst);
        first = false;
      } else {
        for (int x = 0; x < width; ++x)
          if (better(row[x], dst[x])) dst[x] = row[x];
      }
    }
  }
  return out;
}

std::vector<float> gray_values(const Image& img) {
  if (img.channels() != 1) throw Error("morphology requires a single-channel image");
  return {img.data().begin(), img.data().end()};
}

Image from_values(const Image& like, std::vector<float> values) {
  return Image(like.height(), like.width(), 1, std::move(values));
}

std::vector<std::uint8_t> mask_values(const BinaryMask& mask) {
  std::vector<std::uint8_t> v(mask.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = mask[i] ? 1 : 0;
  return v;
}

BinaryMask from_values(const BinaryMask& like, const std::vector<std::uint8_t>& values) {
  BinaryMask out(like.height(), like.width());
  for (int y = 0; y < like.height(); ++y)
    for (int x = 0; x < like.width(); ++x)
      out.set(y, x, values[static_cast<std::size_t>(y) * like.width() + x] != 0);
  return out;
}

template <typename T>
bool less_than(T a, T b) {
  return a < b;
}
template <typename T>
bool greater_than(T a, T b) {
  return a > b;
}

}  // namespace

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dy * dy + dx * dx <= radius * radius) offsets.emplace_back(dy, dx);
  return offsets;
}

Image erode(const Image& img, int radius) {
  return from_values(img, disk_filter(gray_values(img), img.height(), img.width(), radius,
                                      less_than<float>));
}

Image dilate(const Image& img, int radius) {
  return from_values(img, disk_filter(gray_values(img), img.height(), img.width(), radius,
                                      greater_than<float>));
}

Image open(const Image& img, int radius) { return dilate(erode(img, radius), radius); }
Image close(const Image& img, int radius) { return erode(dilate(img, radius), radius); }

Image white_tophat(const Image& img, int radius) {
  Image out = open(img, radius);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] - dst[i];
  return out;
}

Image black_tophat(const Image& img, int radius) {
  Image out = close(img, radius);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = dst[i] - src[i];
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  return from_values(mask, disk_filter(mask_values(mask), mask.height(), mask.width(), radius,
                                       less_than<std::uint8_t>));
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  return from_values(mask, disk_filter(mask_values(mask), mask.height(), mask.width(), radius,
                                       greater_than<std::uint8_t>));
}

BinaryMask open(const BinaryMask& mask, int radius) { return dilate(erode(mask, radius), radius); }
BinaryMask close(const BinaryMask& mask, int radius) { return erode(dilate(mask, radius), radius); }

Components label_components(const BinaryMask& mask) {
  const int h = mask.height();
  const int w = mask.width();
  Components comps;
  comps.labels.assign(mask.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int idx = y * w + x;
      if (!mask.at(y, x) || comps.labels[idx] != 0) continue;
      const int label = comps.count() + 1;
      int size = 0;
      comps.labels[idx] = label;
      stack.push_back(idx);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        ++size;
        const int cy = cur / w;
        const int cx = cur % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy;
            const int nx = cx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const int nidx = ny * w + nx;
            if (mask.at(ny, nx) && comps.labels[nidx] == 0) {
              comps.labels[nidx] = label;
              stack.push_back(nidx);
            }
          }
        }
      }
      comps.sizes.push_back(size);
    }
  }
  return comps;
}

BinaryMask remove_small_components(const BinaryMask& mask, int min_size) {
  if (min_size <= 1) return mask;
  const Components comps = label_components(mask);
  BinaryMask out(mask.height(), mask.width());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const int label = comps.labels[static_cast<std::size_t>(y) * mask.width() + x];
      if (label > 0 && comps.sizes[label - 1] >= min_size) out.set(y, x, true);
    }
  }
  return out;
}

}  // namespace edgeadain
