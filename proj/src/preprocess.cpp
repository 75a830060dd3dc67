#include "edgeadain/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "edgeadain/morphology.hpp"

namespace edgeadain {
namespace {

void require_gray(const Image& img, const char* op) {
  if (img.channels() != 1) throw Error(std::string(op) + " requires a single-channel image");
}

double median_of(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  }
  return m;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (median_radius < 0) throw Error("median_radius must be >= 0");
  if (nlm_patch < 3 || nlm_patch % 2 == 0) throw Error("nlm_patch must be odd and >= 3");
  if (nlm_search <= nlm_patch || nlm_search % 2 == 0) {
    throw Error("nlm_search must be odd and larger than nlm_patch");
  }
  if (!(nlm_h > 0.0f)) throw Error("nlm_h must be > 0");
  if (nlm_neighbours < 1) throw Error("nlm_neighbours must be >= 1");
  if (tophat_radii.empty()) throw Error("tophat_radii must not be empty");
  for (std::size_t i = 0; i < tophat_radii.size(); ++i) {
    if (tophat_radii[i] < 1) throw Error("tophat_radii entries must be >= 1");
    if (i > 0 && tophat_radii[i] <= tophat_radii[i - 1]) {
      throw Error("tophat_radii must be strictly increasing");
    }
  }
}

Image median_filter(const Image& gray, int radius) {
  require_gray(gray, "median_filter");
  if (radius <= 0) return gray;
  const int h = gray.height();
  const int w = gray.width();
  Image out(h, w, 1);
  std::vector<float> window;
  window.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      window.clear();
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = reflect_index(y + dy, h);
        for (int dx = -radius; dx <= radius; ++dx) {
          window.push_back(gray.at(yy, reflect_index(x + dx, w)));
        }
      }
      const auto mid = window.begin() + window.size() / 2;
      std::nth_element(window.begin(), mid, window.end());
      out.at(y, x) = *mid;
    }
  }
  return out;
}

double estimate_noise_sigma(const Image& gray) {
  require_gray(gray, "estimate_noise_sigma");
  const int h = gray.height();
  const int w = gray.width();
  std::vector<double> residual;
  residual.reserve(gray.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double lap = static_cast<double>(gray.at(reflect_index(y - 1, h), x)) +
                         gray.at(reflect_index(y + 1, h), x) + gray.at(y, reflect_index(x - 1, w)) +
                         gray.at(y, reflect_index(x + 1, w)) - 4.0 * gray.at(y, x);
      residual.push_back(lap);
    }
  }
  std::vector<double> tmp = residual;
  const double med = median_of(tmp);
  for (double& r : residual) r = std::abs(r - med);
  const double mad = median_of(residual);
  // 1.4826 maps MAD to std for Gaussian noise; sqrt(20) is the Laplacian kernel's L2 norm.
  return 1.4826 * mad / std::sqrt(20.0);
}

Image nlm_snn(const Image& gray, int patch, int search, float h, int neighbours) {
  require_gray(gray, "nlm_snn");
  const int height = gray.height();
  const int width = gray.width();
  const int pr = patch / 2;
  const int sr = search / 2;
  const int pad = pr + sr;
  const int pw = width + 2 * pad;
  const int ph = height + 2 * pad;

  std::vector<float> padded(static_cast<std::size_t>(ph) * pw);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      padded[static_cast<std::size_t>(y) * pw + x] =
          gray.at(reflect_index(y - pad, height), reflect_index(x - pad, width));
  auto px = [&](int y, int x) { return padded[static_cast<std::size_t>(y + pad) * pw + x + pad]; };

  const double sigma = estimate_noise_sigma(gray);
  const double offset = 2.0 * sigma * sigma;
  const double inv_h2 = 1.0 / (static_cast<double>(h) * h);
  const double inv_patch_area = 1.0 / (static_cast<double>(patch) * patch);

  std::vector<std::pair<int, int>> offsets;
  for (int dy = -sr; dy <= sr; ++dy)
    for (int dx = -sr; dx <= sr; ++dx) offsets.emplace_back(dy, dx);
  const int n_off = static_cast<int>(offsets.size());
  const int keep = std::min(neighbours, n_off);

  constexpr int kStrip = 16;
  Image out(height, width, 1);
  std::vector<double> dist;
  std::vector<double> colsum;
  std::vector<std::pair<double, int>> ranked(n_off);

  for (int y0 = 0; y0 < height; y0 += kStrip) {
    const int y1 = std::min(height, y0 + kStrip);
    const int rows = y1 - y0;
    dist.assign(static_cast<std::size_t>(n_off) * rows * width, 0.0);
    const int span_w = width + 2 * pr;
    colsum.resize(static_cast<std::size_t>(rows) * span_w);
    for (int k = 0; k < n_off; ++k) {
      const auto [dy, dx] = offsets[k];
      // Vertical patch sums of squared differences for columns [-pr, width + pr).
      for (int r = 0; r < rows; ++r) {
        const int y = y0 + r;
        for (int cx = 0; cx < span_w; ++cx) {
          const int x = cx - pr;
          double s = 0.0;
          for (int a = -pr; a <= pr; ++a) {
            const double d = static_cast<double>(px(y + a, x)) - px(y + a + dy, x + dx);
            s += d * d;
          }
          colsum[static_cast<std::size_t>(r) * span_w + cx] = s;
        }
      }
      double* dk = dist.data() + static_cast<std::size_t>(k) * rows * width;
      for (int r = 0; r < rows; ++r) {
        const double* cs = colsum.data() + static_cast<std::size_t>(r) * span_w;
        for (int x = 0; x < width; ++x) {
          double s = 0.0;
          for (int b = 0; b < patch; ++b) s += cs[x + b];
          dk[static_cast<std::size_t>(r) * width + x] = s * inv_patch_area;
        }
      }
    }
    for (int r = 0; r < rows; ++r) {
      const int y = y0 + r;
      for (int x = 0; x < width; ++x) {
        const std::size_t local = static_cast<std::size_t>(r) * width + x;
        for (int k = 0; k < n_off; ++k) {
          const double d = dist[static_cast<std::size_t>(k) * rows * width + local];
          ranked[k] = {std::abs(d - offset), k};
        }
        std::nth_element(ranked.begin(), ranked.begin() + (keep - 1), ranked.end());
        double wsum = 0.0;
        double vsum = 0.0;
        for (int i = 0; i < keep; ++i) {
          const int k = ranked[i].second;
          const double d = dist[static_cast<std::size_t>(k) * rows * width + local];
          const double wgt = std::exp(-std::max(d - offset, 0.0) * inv_h2);
          wsum += wgt;
          vsum += wgt * px(y + offsets[k].first, x + offsets[k].second);
        }
        out.at(y, x) = static_cast<float>(vsum / wsum);
      }
    }
  }
  return out;
}

Image denoise(const Image& gray, const PreprocessConfig& cfg) {
  require_gray(gray, "denoise");
  Image out = gray;
  if (cfg.stages.median && cfg.median_radius > 0) out = median_filter(out, cfg.median_radius);
  if (cfg.stages.nlm) {
    out = nlm_snn(out, cfg.nlm_patch, cfg.nlm_search, cfg.nlm_h, cfg.nlm_neighbours);
  }
  return clamp01(out);
}

Image tophat_enhance(const Image& gray, const std::vector<int>& radii) {
  require_gray(gray, "tophat_enhance");
  if (radii.empty()) throw Error("tophat_enhance requires at least one radius");
  Image bright(gray.height(), gray.width(), 1, 0.0f);
  Image dark(gray.height(), gray.width(), 1, 0.0f);
  for (int r : radii) {
    const Image wth = white_tophat(gray, r);
    const Image bth = black_tophat(gray, r);
    for (std::size_t i = 0; i < gray.size(); ++i) {
      bright.data()[i] = std::max(bright.data()[i], wth.data()[i]);
      dark.data()[i] = std::max(dark.data()[i], bth.data()[i]);
    }
  }
  Image out(gray.height(), gray.width(), 1);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    out.data()[i] = std::clamp(gray.data()[i] + bright.data()[i] - dark.data()[i], 0.0f, 1.0f);
  }
  return out;
}

Image preprocess(const Image& img, const PreprocessConfig& cfg) {
  cfg.validate();
  Image gray = to_gray(img);
  gray = denoise(gray, cfg);
  if (cfg.stages.tophat) gray = tophat_enhance(gray, cfg.tophat_radii);
  return to_rgb(gray);
}

}  // namespace edgeadain
