#include "edgeadain/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "edgeadain/png_io.hpp"

namespace edgeadain {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool is_flat(const Image& img) {
  const auto d = img.data();
  const std::size_t c = static_cast<std::size_t>(img.channels());
  for (std::size_t i = c; i < d.size(); ++i)
    if (d[i] != d[i % c]) return false;
  return true;
}

}  // namespace

SegmentResult segment(const Image& input, const Image& style, const StyleNetWeights& weights,
                      const RunConfig& cfg) {
  SegmentResult r;
  const auto t0 = Clock::now();
  r.preprocessed = preprocess(input, cfg.preprocess);
  const auto t1 = Clock::now();
  r.edge = detect_edges(cfg.edge_on_raw ? input : r.preprocessed, cfg.edge);
  const auto t2 = Clock::now();
  r.stylized = stylize(r.preprocessed, style, r.edge, weights, cfg.stylize);
  const auto t3 = Clock::now();
  // A flat frame has no vessels; the network would still turn border effects into strokes.
  r.mask = is_flat(input) ? BinaryMask(input.height(), input.width())
                          : cleanup(binarize(clamp01(r.stylized), cfg.post), cfg.post);
  const auto t4 = Clock::now();
  const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
  r.times = {secs(t0, t1), secs(t1, t2), secs(t2, t3), secs(t3, t4), secs(t0, t4)};
  return r;
}

std::vector<BenchRow> bench(const std::filesystem::path& input_dir, const Image& style,
                            const StyleNetWeights& weights, const RunConfig& cfg, int repeat) {
  if (repeat < 1) throw Error("repeat must be >= 1");
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(input_dir)) {
    for (const auto& e : std::filesystem::directory_iterator(input_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
  } else {
    throw Error("not a directory: " + input_dir.string());
  }
  if (files.empty()) throw Error("no PNG images in " + input_dir.string());
  std::sort(files.begin(), files.end());

  std::vector<BenchRow> rows;
  for (const auto& file : files) {
    const Image input = read_png(file);
    RunConfig run = cfg;
    if (cfg.edge.provider == EdgeProvider::external_file) run.edge.file = cfg.edge.file / file.filename();
    segment(input, style, weights, run);  // warm-up
    std::vector<StageTimes> samples;
    for (int i = 0; i < repeat; ++i) {
      const auto start = Clock::now();
      StageTimes t = segment(input, style, weights, run).times;
      t.total = seconds_since(start);
      samples.push_back(t);
    }
    BenchRow row{file.filename().string(), input.height(), input.width(), {}, {}};
    auto stat = [&](double StageTimes::*field, double& mean, double& sd) {
      double s = 0.0;
      for (const auto& t : samples) s += t.*field;
      mean = s / samples.size();
      double sq = 0.0;
      for (const auto& t : samples) sq += (t.*field - mean) * (t.*field - mean);
      sd = samples.size() > 1 ? std::sqrt(sq / (samples.size() - 1)) : 0.0;
    };
    for (auto field : {&StageTimes::preprocess, &StageTimes::edge, &StageTimes::stylize,
                       &StageTimes::postprocess, &StageTimes::total}) {
      stat(field, row.mean.*field, row.stddev.*field);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "image,height,width,preprocess_mean,preprocess_std,edge_mean,edge_std,stylize_mean,"
        "stylize_std,postprocess_mean,postprocess_std,total_mean,total_std\n";
  for (const auto& r : rows) {
    os << r.image << "," << r.height << "," << r.width;
    for (auto field : {&StageTimes::preprocess, &StageTimes::edge, &StageTimes::stylize,
                       &StageTimes::postprocess, &StageTimes::total}) {
      os << "," << fmt(r.mean.*field, 6) << "," << fmt(r.stddev.*field, 6);
    }
    os << "\n";
  }
  return os.str();
}

std::string bench_table(const std::vector<BenchRow>& rows, const std::string& method) {
  std::ostringstream os;
  os << "| Segmentation Method | Image | Size | Execution Time/image (s) |\n";
  os << "|---|---|---|---|\n";
  double sum = 0.0;
  for (const auto& r : rows) {
    os << "| " << method << " | " << r.image << " | " << r.height << "x" << r.width << " | "
       << fmt(r.mean.total, 4) << " ± " << fmt(r.stddev.total, 4) << " |\n";
    sum += r.mean.total;
  }
  if (!rows.empty()) {
    os << "| " << method << " | average | - | " << fmt(sum / rows.size(), 4) << " |\n";
  }
  return os.str();
}

}  // namespace edgeadain
