#pragma once

#include <filesystem>

#include "edgeadain/image.hpp"

namespace edgeadain {

enum class EdgeProvider { classical_fallback, external_file };

struct EdgeProviderConfig {
  EdgeProvider provider = EdgeProvider::classical_fallback;
  std::filesystem::path file;  // used by external_file
};

/// Single-channel edge strength in [0,1] with the content image's dimensions.
struct EdgeMap {
  Image strength;
  EdgeProvider provenance = EdgeProvider::classical_fallback;
};

/// Scharr gradient magnitude of the gray image (reflect padding), scaled so the
/// maximum response is 1. A constant image yields all zeros.
EdgeMap scharr_edges(const Image& img);

/// Loads a precomputed edge map (e.g. a DexiNed output), 255 = strongest edge.
EdgeMap load_edge_map(const std::filesystem::path& path, int height, int width);

EdgeMap detect_edges(const Image& img, const EdgeProviderConfig& provider);

}  // namespace edgeadain
