#include "edgeadain/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "edgeadain/png_io.hpp"

namespace edgeadain {
namespace {

double ratio_or_one(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::set<std::string> png_names(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::set<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") names.insert(entry.path().filename().string());
  }
  return names;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.height() != gt.height() || pred.width() != gt.width()) {
    throw Error("confusion: mask dimensions differ");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i];
    const bool g = gt[i];
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

SegMetrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("compute_metrics: empty confusion counts");
  SegMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.sensitivity = ratio_or_one(c.tp, c.tp + c.fn);
  m.specificity = ratio_or_one(c.tn, c.tn + c.fp);
  m.precision = ratio_or_one(c.tp, c.tp + c.fp);
  if (c.tp == 0) {
    // Both masks empty scores 1; otherwise there is no overlap.
    m.dice = (c.fp == 0 && c.fn == 0) ? 1.0 : 0.0;
  } else {
    m.dice = 2.0 * m.precision * m.sensitivity / (m.precision + m.sensitivity);
  }
  return m;
}

EvalReport summarize(std::vector<ReportRow> rows) {
  EvalReport r;
  r.rows = std::move(rows);
  const std::size_t n = r.rows.size();
  if (n == 0) return r;
  auto field = [](const SegMetrics& m, int k) {
    switch (k) {
      case 0: return m.accuracy;
      case 1: return m.sensitivity;
      case 2: return m.specificity;
      case 3: return m.precision;
      default: return m.dice;
    }
  };
  auto count = [](const ConfusionCounts& c, int k) {
    const std::uint64_t v[4] = {c.tp, c.fp, c.tn, c.fn};
    return static_cast<double>(v[k]);
  };
  auto mean_std = [n](auto&& get) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += get(i);
    const double mean = s / n;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += (get(i) - mean) * (get(i) - mean);
    return std::pair{mean, n > 1 ? std::sqrt(sq / (n - 1)) : 0.0};
  };
  double means[5];
  double stds[5];
  for (int k = 0; k < 5; ++k) {
    std::tie(means[k], stds[k]) = mean_std([&](std::size_t i) { return field(r.rows[i].metrics, k); });
  }
  r.mean = {means[0], means[1], means[2], means[3], means[4]};
  r.stddev = {stds[0], stds[1], stds[2], stds[3], stds[4]};
  for (int k = 0; k < 4; ++k) {
    std::tie(r.mean_counts[k], r.std_counts[k]) =
        mean_std([&](std::size_t i) { return count(r.rows[i].counts, k); });
  }
  return r;
}

EvalReport evaluate_batch(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_dir) {
  const auto preds = png_names(pred_dir);
  const auto gts = png_names(gt_dir);
  std::vector<std::string> unmatched;
  for (const auto& p : preds)
    if (!gts.count(p)) unmatched.push_back(p + " (no ground truth)");
  for (const auto& g : gts)
    if (!preds.count(g)) unmatched.push_back(g + " (no prediction)");
  if (!unmatched.empty()) {
    std::string msg = "unmatched files:";
    for (const auto& u : unmatched) msg += " " + u;
    throw Error(msg);
  }
  if (preds.empty()) throw Error("no PNG images in " + pred_dir.string());
  std::vector<ReportRow> rows;
  for (const auto& name : preds) {
    const auto counts = confusion(read_mask_png(pred_dir / name), read_mask_png(gt_dir / name));
    rows.push_back({name, counts, compute_metrics(counts)});
  }
  return summarize(std::move(rows));
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "image,tp,fp,tn,fn,accuracy,sensitivity,specificity,precision,dice\n";
  auto metrics = [&](const SegMetrics& m) {
    os << fmt(m.accuracy) << "," << fmt(m.sensitivity) << "," << fmt(m.specificity) << ","
       << fmt(m.precision) << "," << fmt(m.dice) << "\n";
  };
  for (const auto& row : report.rows) {
    os << row.image << "," << row.counts.tp << "," << row.counts.fp << "," << row.counts.tn << ","
       << row.counts.fn << ",";
    metrics(row.metrics);
  }
  os << "MEAN";
  for (double v : report.mean_counts) os << "," << fmt(v, 2);
  os << ",";
  metrics(report.mean);
  os << "STD";
  for (double v : report.std_counts) os << "," << fmt(v, 2);
  os << ",";
  metrics(report.stddev);
  return os.str();
}

std::string report_markdown(const EvalReport& report, const std::string& method) {
  const auto pm = [](double mean, double sd) { return fmt(mean, 4) + " ± " + fmt(sd, 4); };
  std::ostringstream os;
  os << "Segmentation results on " << report.rows.size() << " images\n\n";
  os << "| Method | Sensitivity | Specificity | Accuracy | Dice |\n";
  os << "|---|---|---|---|---|\n";
  os << "| " << method << " | " << fmt(report.mean.sensitivity, 4) << " | "
     << fmt(report.mean.specificity, 4) << " | " << fmt(report.mean.accuracy, 4) << " | "
     << fmt(report.mean.dice, 4) << " |\n\n";
  os << "| Segmentation Method | Detection Rate | Precision | F-measure |\n";
  os << "|---|---|---|---|\n";
  os << "| " << method << " | " << pm(report.mean.sensitivity, report.stddev.sensitivity) << " | "
     << pm(report.mean.precision, report.stddev.precision) << " | "
     << pm(report.mean.dice, report.stddev.dice) << " |\n";
  return os.str();
}

}  // namespace edgeadain
