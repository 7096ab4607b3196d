#include "kdlseg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "kdlseg/error.hpp"

namespace kdlseg {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& truth, const BinaryMask& eval) {
  const auto same = [&](const BinaryMask& m) { return m.width == pred.width && m.height == pred.height; };
  if (!same(truth) || !same(eval)) {
    throw DimensionMismatch("confusion: masks are " + std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                            ", " + std::to_string(truth.width) + "x" + std::to_string(truth.height) + " and " +
                            std::to_string(eval.width) + "x" + std::to_string(eval.height));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    if (!eval.bits[i]) continue;
    const bool p = pred.bits[i] != 0;
    const bool t = truth.bits[i] != 0;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) noexcept {
  return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double dice(const ConfusionCounts& c) noexcept { return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn); }
double jaccard(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fp + c.fn); }
double sensitivity(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fn); }
double specificity(const ConfusionCounts& c) noexcept { return ratio(c.tn, c.tn + c.fp); }

SegmentationMetrics compute_metrics(const ConfusionCounts& c) noexcept {
  return {dice(c), jaccard(c), sensitivity(c), specificity(c)};
}

SegmentationMetrics mean_metrics(const std::vector<SegmentationMetrics>& rows) noexcept {
  SegmentationMetrics m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.dice += r.dice;
    m.jaccard += r.jaccard;
    m.sensitivity += r.sensitivity;
    m.specificity += r.specificity;
  }
  const auto n = static_cast<double>(rows.size());
  m.dice /= n;
  m.jaccard /= n;
  m.sensitivity /= n;
  m.specificity /= n;
  return m;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_kv(const SegmentationMetrics& m, const std::string& prefix) {
  std::string out;
  out += prefix + "dice=" + fixed6(m.dice) + "\n";
  out += prefix + "jaccard=" + fixed6(m.jaccard) + "\n";
  out += prefix + "sensitivity=" + fixed6(m.sensitivity) + "\n";
  out += prefix + "specificity=" + fixed6(m.specificity) + "\n";
  return out;
}

std::string metrics_table(const std::vector<std::pair<std::string, SegmentationMetrics>>& rows) {
  std::size_t label_width = 4;
  for (const auto& [label, m] : rows) label_width = std::max(label_width, label.size());
  const auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::string out = pad("case", label_width) + "  " + pad("dice", 10) + pad("jaccard", 10) + pad("sens", 10) + "spec\n";
  for (const auto& [label, m] : rows) {
    out += pad(label, label_width) + "  " + pad(fixed6(m.dice), 10) + pad(fixed6(m.jaccard), 10) +
           pad(fixed6(m.sensitivity), 10) + fixed6(m.specificity) + "\n";
  }
  return out;
}

}  // namespace kdlseg
