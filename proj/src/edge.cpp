#include "edgeadain/edge.hpp"

#include <algorithm>
#include <cmath>

#include "edgeadain/png_io.hpp"

namespace edgeadain {

EdgeMap scharr_edges(const Image& img) {
  const Image gray = to_gray(img);
  const int h = gray.height();
  const int w = gray.width();
  static constexpr float kSmooth[3] = {3.0f, 10.0f, 3.0f};
  Image mag(h, w, 1);
  float peak = 0.0f;
  for (int y = 0; y < h; ++y) {
    const int up = reflect_index(y - 1, h);
    const int down = reflect_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int left = reflect_index(x - 1, w);
      const int right = reflect_index(x + 1, w);
      // Central differences first so flat regions give exactly zero.
      float gx = 0.0f;
      float gy = 0.0f;
      for (int k = -1; k <= 1; ++k) {
        const int yy = reflect_index(y + k, h);
        const int xx = reflect_index(x + k, w);
        gx += kSmooth[k + 1] * (gray.at(yy, right) - gray.at(yy, left));
        gy += kSmooth[k + 1] * (gray.at(down, xx) - gray.at(up, xx));
      }
      const float m = std::sqrt(gx * gx + gy * gy);
      mag.at(y, x) = m;
      peak = std::max(peak, m);
    }
  }
  if (peak > 0.0f) {
    for (float& v : mag.data()) v /= peak;
  }
  return {std::move(mag), EdgeProvider::classical_fallback};
}

EdgeMap load_edge_map(const std::filesystem::path& path, int height, int width) {
  if (!std::filesystem::exists(path)) throw Error("edge map file not found: " + path.string());
  Image gray = to_gray(read_png(path));
  if (gray.height() != height || gray.width() != width) throw Error("edge map size mismatch");
  return {clamp01(gray), EdgeProvider::external_file};
}

EdgeMap detect_edges(const Image& img, const EdgeProviderConfig& provider) {
  switch (provider.provider) {
    case EdgeProvider::external_file:
      return load_edge_map(provider.file, img.height(), img.width());
    case EdgeProvider::classical_fallback:
      break;
  }
  return scharr_edges(img);
}

}  // namespace edgeadain
