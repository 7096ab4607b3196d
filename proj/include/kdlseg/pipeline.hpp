#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kdlseg/config.hpp"
#include "kdlseg/dictionary.hpp"
#include "kdlseg/features.hpp"
#include "kdlseg/imaging.hpp"
#include "kdlseg/metrics.hpp"

namespace kdlseg {

/// Intensity normalization followed by Gaussian smoothing.
GrayImage preprocess_image(const GrayImage& image, double sigma, std::size_t radius);

/// Indices (into `scaled`) of the `n` vectors chosen from class `tissue`
/// against the other labeled class, in pick order.
std::vector<std::size_t> select_class(const FeatureSet& scaled, TissueClass tissue, std::size_t n,
                                      std::size_t block_size, std::size_t threads);

TrainParams train_params(const RunConfig& config);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct CaseResult {
  std::string name;
  ConfusionCounts counts;
  SegmentationMetrics metrics;
};

struct PipelineResult {
  std::vector<CaseResult> cases;
  SegmentationMetrics mean;
  std::vector<StageTiming> timings;  // in execution order, "total" last
  TrainReport normal_report;
  TrainReport tumor_report;
  std::size_t normal_selected = 0;
  std::size_t tumor_selected = 0;
  std::vector<std::string> warnings;
};

/// phantom → preprocess → extract → scale → select → train → segment →
/// evaluate. Writes phantoms, models, masks, metrics.txt, report.txt,
/// timings.txt and config.resolved under `out_dir`; progress goes to `log`.
/// Everything except timings.txt is independent of the thread count.
PipelineResult run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace kdlseg
