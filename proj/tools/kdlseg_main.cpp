// kdlseg command-line front end.

#include <CLI11.hpp>

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/classify.hpp"
#include "kdlseg/config.hpp"
#include "kdlseg/dictionary.hpp"
#include "kdlseg/error.hpp"
#include "kdlseg/features.hpp"
#include "kdlseg/imaging.hpp"
#include "kdlseg/metrics.hpp"
#include "kdlseg/parallel.hpp"
#include "kdlseg/phantom.hpp"
#include "kdlseg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kdlseg;

namespace {

// Config layering: defaults, then --config file, then individual flags.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
  bool no_scaling = false;
  bool inverted_rule = false;

  RunConfig resolve() const {
    RunConfig c = file.empty() ? RunConfig{} : load_config(file);
    for (const auto& [key, value] : values) set_config_value(c, key, value);
    if (no_scaling) c.scaling = false;
    if (inverted_rule) c.inverted_rule = true;
    c.validate();
    c.threads = resolve_threads(c.threads);
    return c;
  }
};

void add_config_flags(CLI::App* app, ConfigFlags& flags) {
  app->add_option("--config", flags.file, "Config file with 'key = value' lines")->check(CLI::ExistingFile);
  for (const std::string& key : config_keys()) {
    std::string flag = "--" + key;
    for (char& ch : flag)
      if (ch == '_') ch = '-';
    app->add_option_function<std::string>(
           flag, [&flags, key](const std::string& v) { flags.values[key] = v; }, "Override config key " + key)
        ->group("Config");
  }
  app->add_flag("--no-scaling", flags.no_scaling, "Disable z-score feature scaling")->group("Config");
  app->add_flag("--inverted", flags.inverted_rule, "Label normal when the normal dictionary fits worse")
      ->group("Config");
}

void echo_config(const fs::path& output, const RunConfig& config) {
  fs::path p = output;
  p += ".config";
  save_config(p, config);
}

bool is_kvol(const fs::path& p) { return p.extension() == ".kvol"; }

// Loads a 2-D mask (PGM) or a volume mask (KVOL, flattened) for evaluation.
BinaryMask load_any_mask(const fs::path& p) {
  if (!is_kvol(p)) return load_mask_pgm(p);
  const MaskVolume v = load_mask_volume(p);
  BinaryMask m(v.bits.size(), 1);
  m.bits = v.bits;
  return m;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

FeatureSet class_vectors(const FeatureSet& set, TissueClass tissue, const fs::path& path) {
  const std::vector<std::size_t> idx = set.indices_of(tissue);
  if (idx.empty()) throw InvalidArgument(path.string() + ": no vectors labeled " + to_string(tissue));
  return set.subset(idx);
}

void print_train_report(const TrainReport& r) {
  std::printf("atoms=%zu sparsity=%zu samples=%zu\n", r.atoms, r.sparsity, r.samples);
  std::printf("initial_error=%.9g\n", r.initial_error);
  for (std::size_t i = 0; i < r.iterations.size(); ++i) {
    const IterationStats& s = r.iterations[i];
    std::printf("iter %2zu coding_error=%.9g updated_error=%.9g replaced=%zu coding_ms=%.1f update_ms=%.1f\n", i + 1,
                s.coding_error, s.updated_error, s.replaced_atoms, s.coding_ms, s.update_ms);
  }
  std::printf("converged=%s gram_ms=%.1f total_ms=%.1f\n", r.converged ? "true" : "false", r.gram_ms, r.total_ms);
  for (const std::string& w : r.warnings) std::printf("warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel dictionary learning segmentation toolkit"};
  app.require_subcommand(1);

  // preprocess
  ConfigFlags pre_cfg;
  std::string pre_in, pre_out, pre_mask;
  auto* pre = app.add_subcommand("preprocess", "Normalize, smooth and compute the valid-region mask");
  pre->add_option("--input", pre_in, "Input PGM")->required();
  pre->add_option("--out-image", pre_out, "Preprocessed image PGM")->required();
  pre->add_option("--out-mask", pre_mask, "Valid-region mask PGM")->required();
  add_config_flags(pre, pre_cfg);

  // extract
  ConfigFlags ext_cfg;
  std::string ext_image, ext_mask, ext_truth, ext_out;
  auto* ext = app.add_subcommand("extract", "Texture descriptors for every valid pixel");
  ext->add_option("--image", ext_image, "Preprocessed PGM")->required();
  ext->add_option("--mask", ext_mask, "Valid-region mask PGM")->required();
  ext->add_option("--truth", ext_truth, "Optional tumor mask PGM used for labels");
  ext->add_option("--out", ext_out, "Output KDF1 file")->required();
  add_config_flags(ext, ext_cfg);

  // select
  ConfigFlags sel_cfg;
  std::string sel_features, sel_class, sel_out, sel_indices;
  auto* sel = app.add_subcommand("select", "Greedy selection of representative vectors of one class");
  sel->add_option("--features", sel_features, "Labeled KDF1 file holding both classes")->required();
  sel->add_option("--class", sel_class, "normal or tumor")->required();
  sel->add_option("--out", sel_out, "Selected subset (KDF1, unscaled)")->required();
  sel->add_option("--indices", sel_indices, "Index list (default: <out>.idx)");
  add_config_flags(sel, sel_cfg);

  // train
  ConfigFlags trn_cfg;
  std::string trn_features, trn_class, trn_out, trn_scaler;
  auto* trn = app.add_subcommand("train", "Train one class dictionary");
  trn->add_option("--features", trn_features, "Training vectors (KDF1)")->required();
  trn->add_option("--class", trn_class, "normal or tumor")->required();
  trn->add_option("--out", trn_out, "Output KDL1 model")->required();
  trn->add_option("--scaler-features", trn_scaler, "KDF1 file to fit the scaler on (default: --features)");
  add_config_flags(trn, trn_cfg);

  // segment
  ConfigFlags seg_cfg;
  std::string seg_image, seg_mask, seg_normal, seg_tumor, seg_out, seg_maps;
  auto* seg = app.add_subcommand("segment", "Pixel-wise classification of one slice");
  seg->add_option("--image", seg_image, "Preprocessed PGM")->required();
  seg->add_option("--mask", seg_mask, "Valid-region mask PGM")->required();
  seg->add_option("--normal", seg_normal, "Normal-tissue model")->required();
  seg->add_option("--tumor", seg_tumor, "Tumor model")->required();
  seg->add_option("--out", seg_out, "Output tumor mask PGM")->required();
  seg->add_option("--error-maps", seg_maps, "Prefix for per-pixel error maps (KVOL)");
  add_config_flags(seg, seg_cfg);

  // segment-volume
  ConfigFlags vol_cfg;
  std::string vol_volume, vol_mask, vol_out, vol_axis;
  std::vector<std::string> vol_normal, vol_tumor;
  auto* vol = app.add_subcommand("segment-volume", "Three-axis segmentation of a volume with majority fusion");
  vol->add_option("--volume", vol_volume, "Preprocessed KVOL volume")->required();
  vol->add_option("--mask", vol_mask, "Valid-region KVOL mask (0/1)")->required();
  vol->add_option("--normal", vol_normal, "Normal models: one, or one per axis X Y Z")->required();
  vol->add_option("--tumor", vol_tumor, "Tumor models: one, or one per axis X Y Z")->required();
  vol->add_option("--out", vol_out, "Fused KVOL mask")->required();
  vol->add_option("--axis-prefix", vol_axis, "Prefix for the per-axis KVOL masks");
  add_config_flags(vol, vol_cfg);

  // evaluate
  std::string ev_pred, ev_truth, ev_eval, ev_out;
  auto* ev = app.add_subcommand("evaluate", "Dice, Jaccard, sensitivity and specificity");
  ev->add_option("--pred", ev_pred, "Predicted mask (PGM or KVOL)")->required();
  ev->add_option("--truth", ev_truth, "Ground-truth mask (PGM or KVOL)")->required();
  ev->add_option("--eval-mask", ev_eval, "Restrict evaluation to this mask");
  ev->add_option("--out", ev_out, "Write metric=value lines here");

  // phantom
  ConfigFlags ph_cfg;
  std::string ph_out;
  std::size_t ph_count = 1;
  auto* ph = app.add_subcommand("phantom", "Synthetic two-texture phantoms with ground truth");
  ph->add_option("--out", ph_out, "Output directory")->required();
  ph->add_option("--count", ph_count, "Number of phantoms")->check(CLI::Range(1, 10000));
  add_config_flags(ph, ph_cfg);

  // pipeline
  ConfigFlags pl_cfg;
  std::string pl_out;
  auto* pl = app.add_subcommand("pipeline", "Phantom to metrics, end to end");
  pl->add_option("--out", pl_out, "Output directory")->required();
  add_config_flags(pl, pl_cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*pre) {
      const RunConfig c = pre_cfg.resolve();
      const GrayImage img = preprocess_image(load_pgm(pre_in), c.sigma, c.radius);
      const BinaryMask mask = compute_brain_mask(img, c.threshold_fraction);
      ensure_parent(pre_out);
      ensure_parent(pre_mask);
      save_pgm(pre_out, img);
      save_pgm(pre_mask, mask);
      echo_config(pre_out, c);
      std::printf("valid pixels: %zu of %zu\n", mask.count(), mask.size());
    } else if (*ext) {
      const RunConfig c = ext_cfg.resolve();
      const GrayImage img = load_pgm(ext_image);
      const BinaryMask mask = load_mask_pgm(ext_mask);
      std::optional<BinaryMask> truth;
      if (!ext_truth.empty()) truth = load_mask_pgm(ext_truth);
      const FeatureSet set = extract_features(img, mask, truth, c.glcm_levels, c.threads);
      ensure_parent(ext_out);
      save_features(ext_out, set);
      echo_config(ext_out, c);
      std::printf("vectors: %zu (normal %zu, tumor %zu)\n", set.count(), set.indices_of(TissueClass::normal).size(),
                  set.indices_of(TissueClass::tumor).size());
    } else if (*sel) {
      const RunConfig c = sel_cfg.resolve();
      const TissueClass tissue = parse_tissue_class(sel_class);
      const FeatureSet all = load_features(sel_features);
      if (all.empty()) throw InvalidArgument(sel_features + ": feature file is empty");
      const FeatureScaler scaler = c.scaling ? fit_scaler(all.vectors) : FeatureScaler::identity(all.dim());
      FeatureSet scaled = all;
      scaled.vectors = apply_scaler(all.vectors, scaler);
      const std::vector<std::size_t> picks = select_class(scaled, tissue, c.selected, c.block_size, c.threads);
      ensure_parent(sel_out);
      save_features(sel_out, all.subset(picks));
      std::string list;
      for (std::size_t i : picks) list += std::to_string(i) + "\n";
      io::write_file_atomic(sel_indices.empty() ? sel_out + ".idx" : sel_indices, list);
      echo_config(sel_out, c);
      std::printf("selected %zu %s vectors\n", picks.size(), to_string(tissue));
    } else if (*trn) {
      const RunConfig c = trn_cfg.resolve();
      const TissueClass tissue = parse_tissue_class(trn_class);
      const FeatureSet own = class_vectors(load_features(trn_features), tissue, trn_features);
      FeatureScaler scaler = FeatureScaler::identity(own.dim());
      if (c.scaling) scaler = fit_scaler(trn_scaler.empty() ? own.vectors : load_features(trn_scaler).vectors);
      auto [dict, report] = train(apply_scaler(own.vectors, scaler), train_params(c), tissue, scaler);
      ensure_parent(trn_out);
      save_model(trn_out, dict);
      echo_config(trn_out, c);
      print_train_report(report);
    } else if (*seg) {
      const RunConfig c = seg_cfg.resolve();
      const TissueClassifier classifier(load_model(seg_normal), load_model(seg_tumor),
                                        c.inverted_rule ? DecisionRule::inverted : DecisionRule::min_error, c.threads);
      const SegmentationResult r =
          segment_slice(load_pgm(seg_image), load_mask_pgm(seg_mask), classifier, c.glcm_levels, c.threads);
      ensure_parent(seg_out);
      save_pgm(seg_out, r.mask);
      if (!seg_maps.empty()) {
        const auto as_volume = [](const GrayImage& img) {
          GrayVolume v(img.width, img.height, 1);
          v.voxels = img.pixels;
          return v;
        };
        save_kvol(seg_maps + "_normal.kvol", as_volume(r.err_normal));
        save_kvol(seg_maps + "_tumor.kvol", as_volume(r.err_tumor));
      }
      echo_config(seg_out, c);
      std::printf("tumor pixels: %zu of %zu classified\n", r.mask.count(), r.classified.count());
    } else if (*vol) {
      const RunConfig c = vol_cfg.resolve();
      if ((vol_normal.size() != 1 && vol_normal.size() != 3) || vol_tumor.size() != vol_normal.size()) {
        throw InvalidArgument("segment-volume: give one or three --normal and matching --tumor models");
      }
      const DecisionRule rule = c.inverted_rule ? DecisionRule::inverted : DecisionRule::min_error;
      std::vector<std::unique_ptr<TissueClassifier>> owned;
      for (std::size_t i = 0; i < vol_normal.size(); ++i) {
        owned.push_back(
            std::make_unique<TissueClassifier>(load_model(vol_normal[i]), load_model(vol_tumor[i]), rule, c.threads));
      }
      std::array<const TissueClassifier*, 3> per_axis{};
      for (std::size_t a = 0; a < 3; ++a) per_axis[a] = owned[owned.size() == 3 ? a : 0].get();
      const VolumeSegmentation r =
          segment_volume(load_kvol(vol_volume), load_mask_volume(vol_mask), per_axis, c.glcm_levels, c.threads);
      ensure_parent(vol_out);
      save_mask_volume(vol_out, r.fused);
      if (!vol_axis.empty()) {
        const char* names[3] = {"_x.kvol", "_y.kvol", "_z.kvol"};
        for (std::size_t a = 0; a < 3; ++a) save_mask_volume(vol_axis + names[a], r.per_axis[a]);
      }
      echo_config(vol_out, c);
      std::printf("tumor voxels: %zu\n", r.fused.count());
    } else if (*ev) {
      const BinaryMask pred = load_any_mask(ev_pred);
      const BinaryMask truth = load_any_mask(ev_truth);
      const BinaryMask eval = ev_eval.empty() ? BinaryMask(pred.width, pred.height, 1) : load_any_mask(ev_eval);
      const ConfusionCounts counts = confusion(pred, truth, eval);
      const std::string kv = metrics_kv(compute_metrics(counts));
      std::printf("tp=%llu fp=%llu fn=%llu tn=%llu\n", static_cast<unsigned long long>(counts.tp),
                  static_cast<unsigned long long>(counts.fp), static_cast<unsigned long long>(counts.fn),
                  static_cast<unsigned long long>(counts.tn));
      std::fputs(kv.c_str(), stdout);
      if (!ev_out.empty()) {
        ensure_parent(ev_out);
        io::write_file_atomic(ev_out, kv);
      }
    } else if (*ph) {
      const RunConfig c = ph_cfg.resolve();
      for (std::size_t i = 0; i < ph_count; ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "phantom_%02zu", i);
        write_phantom(ph_out, stem, generate_phantom(random_phantom_spec(series_seed(c.seed, i), c.phantom_size)));
      }
      save_config(fs::path(ph_out) / "config.resolved", c);
      std::printf("wrote %zu phantoms to %s\n", ph_count, ph_out.c_str());
    } else if (*pl) {
      const RunConfig c = pl_cfg.resolve();
      run_pipeline(c, pl_out, std::cout);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kdlseg: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
