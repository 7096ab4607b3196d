#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kdlseg/imaging.hpp"

namespace kdlseg {

/// Pixel counts over the evaluated region; positive = tumor.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept;
  bool operator==(const ConfusionCounts&) const = default;
};

/// Counts over pixels where `eval` is set. All masks must share dimensions.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth, const BinaryMask& eval);

// A zero denominator yields 1: both masks agree that the class is absent.
double dice(const ConfusionCounts& c) noexcept;
double jaccard(const ConfusionCounts& c) noexcept;
double sensitivity(const ConfusionCounts& c) noexcept;
double specificity(const ConfusionCounts& c) noexcept;

struct SegmentationMetrics {
  double dice = 0.0;
  double jaccard = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
};

SegmentationMetrics compute_metrics(const ConfusionCounts& c) noexcept;

/// Component-wise mean; all zeros for an empty list.
SegmentationMetrics mean_metrics(const std::vector<SegmentationMetrics>& rows) noexcept;

/// "dice=0.750000" style lines, one metric per line, fixed order.
std::string metrics_kv(const SegmentationMetrics& m, const std::string& prefix = "");

/// Aligned table with one labeled row per entry.
std::string metrics_table(const std::vector<std::pair<std::string, SegmentationMetrics>>& rows);

}  // namespace kdlseg
