#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "edgeadain/config.hpp"

namespace edgeadain {

struct StageTimes {
  double preprocess = 0.0;
  double edge = 0.0;
  double stylize = 0.0;
  double postprocess = 0.0;
  double total = 0.0;
};

struct SegmentResult {
  Image preprocessed;
  EdgeMap edge;
  Image stylized;  // unclamped decoder output
  BinaryMask mask;
  StageTimes times;  // seconds
};

/// preprocess -> detect_edges -> stylize -> binarize -> cleanup.
SegmentResult segment(const Image& input, const Image& style, const StyleNetWeights& weights,
                      const RunConfig& cfg);

struct BenchRow {
  std::string image;
  int height = 0;
  int width = 0;
  StageTimes mean;
  StageTimes stddev;
};

/// Times segment() `repeat` times per image after one untimed warm-up run.
/// With the file edge provider, cfg.edge.file names a directory of same-named edge maps.
std::vector<BenchRow> bench(const std::filesystem::path& input_dir, const Image& style,
                            const StyleNetWeights& weights, const RunConfig& cfg, int repeat);

std::string bench_csv(const std::vector<BenchRow>& rows);
std::string bench_table(const std::vector<BenchRow>& rows, const std::string& method);

}  // namespace edgeadain
