#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "edgeadain/image.hpp"

namespace edgeadain {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct SegMetrics {
  double accuracy = 0.0;
  double sensitivity = 0.0;  // detection rate
  double specificity = 0.0;
  double precision = 0.0;
  double dice = 0.0;  // F-measure
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Accuracy, sensitivity, specificity, precision and Dice. A zero denominator
/// yields 1 for the ratio; Dice is 1 when both masks are empty and 0 when only one is.
SegMetrics compute_metrics(const ConfusionCounts& c);

struct ReportRow {
  std::string image;
  ConfusionCounts counts;
  SegMetrics metrics;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  SegMetrics mean;
  SegMetrics stddev;  // sample (n − 1) standard deviation; 0 for a single image
  double mean_counts[4] = {0, 0, 0, 0};
  double std_counts[4] = {0, 0, 0, 0};
};

/// Mean and sample standard deviation over per-image rows.
EvalReport summarize(std::vector<ReportRow> rows);

/// Scores every PNG in pred_dir against the same-named PNG in gt_dir.
EvalReport evaluate_batch(const std::filesystem::path& pred_dir,
                          const std::filesystem::path& gt_dir);

/// `image,tp,fp,tn,fn,accuracy,sensitivity,specificity,precision,dice` with MEAN and STD rows.
std::string report_csv(const EvalReport& report);

/// Sensitivity/Specificity/Accuracy/Dice summary, then Detection Rate/Precision/F-measure as mean ± std.
std::string report_markdown(const EvalReport& report, const std::string& method = "Edge-AdaIN");

}  // namespace edgeadain
