#include "kdlseg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <string>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/classify.hpp"
#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"
#include "kdlseg/phantom.hpp"
#include "kdlseg/selection.hpp"

namespace kdlseg {

GrayImage preprocess_image(const GrayImage& image, double sigma, std::size_t radius) {
  return gaussian_filter(normalize_intensity(image), sigma, radius);
}

std::vector<std::size_t> select_class(const FeatureSet& scaled, TissueClass tissue, std::size_t n,
                                      std::size_t block_size, std::size_t threads) {
  if (tissue == TissueClass::unlabeled) throw InvalidArgument("select: target class must be normal or tumor");
  const TissueClass other_class = tissue == TissueClass::normal ? TissueClass::tumor : TissueClass::normal;
  const std::vector<std::size_t> own_idx = scaled.indices_of(tissue);
  if (own_idx.empty()) throw InvalidArgument(std::string("select: no ") + to_string(tissue) + " vectors in the set");
  const FeatureSet own = scaled.subset(own_idx);
  const FeatureSet other = scaled.subset(scaled.indices_of(other_class));
  const std::vector<std::size_t> local = select_samples(own.vectors, other.vectors, n, block_size, threads);
  std::vector<std::size_t> global(local.size());
  std::transform(local.begin(), local.end(), global.begin(), [&](std::size_t i) { return own_idx[i]; });
  return global;
}

TrainParams train_params(const RunConfig& config) {
  TrainParams p;
  p.atoms = config.atoms;
  p.sparsity = config.sparsity;
  p.kernel = KernelSpec::rbf(config.gamma);
  p.max_iters = config.max_iters;
  p.tol = config.tol;
  p.seed = config.seed;
  p.threads = resolve_threads(config.threads);
  p.block_size = config.block_size;
  return p;
}

namespace {

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink), start_(Clock::now()), mark_(start_) {}

  void lap(const std::string& stage) {
    const auto now = Clock::now();
    sink_.push_back({stage, std::chrono::duration<double, std::milli>(now - mark_).count()});
    mark_ = now;
  }
  void finish() {
    sink_.push_back({"total", std::chrono::duration<double, std::milli>(Clock::now() - start_).count()});
  }

 private:
  std::vector<StageTiming>& sink_;
  Clock::time_point start_;
  Clock::time_point mark_;
};

std::string case_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i);
  return buf;
}

struct Prepared {
  GrayImage image;
  BinaryMask valid;
  BinaryMask truth;
  BinaryMask eval;
};

Prepared prepare(const Phantom& p, const RunConfig& config) {
  Prepared out;
  out.image = preprocess_image(p.image, config.sigma, config.radius);
  const BinaryMask brain = compute_brain_mask(out.image, config.threshold_fraction);
  out.valid = p.valid;
  for (std::size_t i = 0; i < out.valid.bits.size(); ++i) out.valid.bits[i] &= brain.bits[i];
  out.truth = p.truth;
  out.eval = p.valid;
  return out;
}

KernelDictionary fit_class(const FeatureSet& scaled, const std::vector<std::size_t>& picks, TissueClass tissue,
                           const FeatureScaler& scaler, const RunConfig& config, TrainReport& report) {
  TrainParams params = train_params(config);
  params.atoms = std::min(params.atoms, picks.size());
  params.sparsity = std::min(params.sparsity, params.atoms);
  auto [dict, rep] = train(scaled.subset(picks).vectors, params, tissue, scaler);
  report = std::move(rep);
  return dict;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log) {
  config.validate();
  if (config.test_count < 1) throw InvalidArgument("pipeline: test_count must be at least 1");
  const std::size_t threads = resolve_threads(config.threads);
  std::filesystem::create_directories(out_dir);

  RunConfig resolved = config;
  resolved.threads = threads;
  save_config(out_dir / "config.resolved", resolved);

  PipelineResult result;
  StageClock clock(result.timings);

  // phantom
  const std::size_t total_cases = config.train_count + config.test_count;
  std::vector<Phantom> phantoms;
  phantoms.reserve(total_cases);
  for (std::size_t i = 0; i < total_cases; ++i) {
    phantoms.push_back(generate_phantom(random_phantom_spec(series_seed(config.seed, i), config.phantom_size)));
    const bool train_case = i < config.train_count;
    write_phantom(out_dir / "phantoms",
                  train_case ? case_name("train", i) : case_name("test", i - config.train_count), phantoms.back());
  }
  clock.lap("phantom");

  std::vector<Prepared> prepared;
  prepared.reserve(total_cases);
  for (const Phantom& p : phantoms) prepared.push_back(prepare(p, config));
  clock.lap("preprocess");

  FeatureSet training;
  for (std::size_t i = 0; i < config.train_count; ++i) {
    training.append(extract_features(prepared[i].image, prepared[i].valid, prepared[i].truth, config.glcm_levels,
                                     threads));
  }
  clock.lap("extract");
  const std::size_t normal_total = training.indices_of(TissueClass::normal).size();
  const std::size_t tumor_total = training.indices_of(TissueClass::tumor).size();
  log << "training vectors: " << normal_total << " normal, " << tumor_total << " tumor\n";
  if (normal_total == 0 || tumor_total == 0) throw InvalidArgument("pipeline: training phantoms lack one of the classes");

  const FeatureScaler scaler = config.scaling ? fit_scaler(training.vectors) : FeatureScaler::identity(training.dim());
  FeatureSet scaled = training;
  scaled.vectors = apply_scaler(training.vectors, scaler);
  clock.lap("scale");

  const auto clamp_n = [&](std::size_t available, const char* what) {
    if (config.selected <= available) return config.selected;
    result.warnings.push_back(std::string("selected clamped to the ") + what + " class size " +
                              std::to_string(available));
    return available;
  };
  const std::vector<std::size_t> normal_picks =
      select_class(scaled, TissueClass::normal, clamp_n(normal_total, "normal"), config.block_size, threads);
  const std::vector<std::size_t> tumor_picks =
      select_class(scaled, TissueClass::tumor, clamp_n(tumor_total, "tumor"), config.block_size, threads);
  result.normal_selected = normal_picks.size();
  result.tumor_selected = tumor_picks.size();
  clock.lap("select");

  KernelDictionary normal_dict =
      fit_class(scaled, normal_picks, TissueClass::normal, scaler, config, result.normal_report);
  clock.lap("train_normal");
  KernelDictionary tumor_dict = fit_class(scaled, tumor_picks, TissueClass::tumor, scaler, config, result.tumor_report);
  clock.lap("train_tumor");
  std::filesystem::create_directories(out_dir / "models");
  save_model(out_dir / "models" / "normal.kdl", normal_dict);
  save_model(out_dir / "models" / "tumor.kdl", tumor_dict);

  const TissueClassifier classifier(std::move(normal_dict), std::move(tumor_dict),
                                    config.inverted_rule ? DecisionRule::inverted : DecisionRule::min_error, threads);
  std::vector<BinaryMask> predictions;
  for (std::size_t i = config.train_count; i < total_cases; ++i) {
    predictions.push_back(
        segment_slice(prepared[i].image, prepared[i].valid, classifier, config.glcm_levels, threads).mask);
  }
  clock.lap("segment");

  std::filesystem::create_directories(out_dir / "masks");
  std::vector<SegmentationMetrics> rows;
  std::vector<std::pair<std::string, SegmentationMetrics>> table;
  std::string kv;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    const Prepared& p = prepared[config.train_count + t];
    CaseResult c;
    c.name = case_name("test", t);
    c.counts = confusion(predictions[t], p.truth, p.eval);
    c.metrics = compute_metrics(c.counts);
    save_pgm(out_dir / "masks" / (c.name + "_mask.pgm"), predictions[t]);
    rows.push_back(c.metrics);
    table.emplace_back(c.name, c.metrics);
    kv += metrics_kv(c.metrics, c.name + ".");
    result.cases.push_back(std::move(c));
  }
  result.mean = mean_metrics(rows);
  table.emplace_back("mean", result.mean);
  kv += metrics_kv(result.mean);
  io::write_file_atomic(out_dir / "metrics.txt", kv);
  io::write_file_atomic(out_dir / "report.txt", metrics_table(table));
  clock.lap("evaluate");
  clock.finish();

  std::string timings;
  for (const StageTiming& s : result.timings) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_ms=%.3f\n", s.stage.c_str(), s.ms);
    timings += buf;
  }
  io::write_file_atomic(out_dir / "timings.txt", timings);

  log << "selected: " << result.normal_selected << " normal, " << result.tumor_selected << " tumor\n";
  for (const std::string& w : result.warnings) log << "warning: " << w << "\n";
  log << metrics_table(table);
  log << timings;
  return result;
}

}  // namespace kdlseg
