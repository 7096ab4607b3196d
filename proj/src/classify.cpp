#include "kdlseg/classify.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdlseg/error.hpp"
#include "kdlseg/kernels.hpp"
#include "kdlseg/parallel.hpp"

namespace kdlseg {

TissueClass decide(double err_normal, double err_tumor, DecisionRule rule) noexcept {
  const bool normal = rule == DecisionRule::min_error ? err_normal < err_tumor : err_normal > err_tumor;
  return normal ? TissueClass::normal : TissueClass::tumor;
}

PreparedDictionary::PreparedDictionary(KernelDictionary dict, std::size_t threads) : dict_(std::move(dict)) {
  dict_.kernel.validate();
  if (dict_.sample_count() == 0 || dict_.atom_count() == 0) throw InvalidArgument("dictionary has no samples or atoms");
  if (static_cast<std::size_t>(dict_.coefficients.rows()) != dict_.sample_count()) {
    throw DimensionMismatch("dictionary coefficient rows differ from its sample count");
  }
  if (dict_.sparsity < 1 || dict_.sparsity > dict_.atom_count()) {
    throw InvalidArgument("dictionary sparsity " + std::to_string(dict_.sparsity) + " not in [1, " +
                          std::to_string(dict_.atom_count()) + "]");
  }
  const Eigen::MatrixXd k = gram(dict_.kernel, dict_.samples, 64, threads);
  coder_ = KompCoder(dict_.coefficients, k);
}

double PreparedDictionary::error2(std::span<const double> scaled, std::span<double> scratch) const {
  kernel_row_into(dict_.kernel, scaled, dict_.samples, scratch);
  const Eigen::Map<const Eigen::VectorXd> kz(scratch.data(), static_cast<Eigen::Index>(scratch.size()));
  const Eigen::VectorXd projection = dict_.coefficients.transpose() * kz;
  const SparseCode code = coder_.code(projection, dict_.sparsity);
  return coder_.error2(projection, kernel_self(dict_.kernel, scaled), code);
}

namespace {

const KernelDictionary& check_pair(const KernelDictionary& normal, const KernelDictionary& tumor) {
  if (normal.tissue != TissueClass::normal) throw InvalidArgument("first model is not a normal-tissue dictionary");
  if (tumor.tissue != TissueClass::tumor) throw InvalidArgument("second model is not a tumor dictionary");
  if (!(normal.kernel == tumor.kernel)) {
    throw InvalidArgument("dictionaries use different kernels (" + to_string(normal.kernel) + " vs " +
                          to_string(tumor.kernel) + ")");
  }
  if (normal.dim() != tumor.dim()) throw DimensionMismatch("dictionaries have different feature dimensions");
  if (!(normal.scaler == tumor.scaler)) throw InvalidArgument("dictionaries were trained with different scalers");
  if (normal.scaler.dim() != normal.dim()) throw DimensionMismatch("scaler dimension differs from the dictionary");
  return normal;
}

}  // namespace

TissueClassifier::TissueClassifier(KernelDictionary normal, KernelDictionary tumor, DecisionRule rule,
                                   std::size_t threads)
    : normal_((check_pair(normal, tumor), std::move(normal)), threads), tumor_(std::move(tumor), threads), rule_(rule) {}

Classification TissueClassifier::classify(std::span<const double> raw) const {
  const std::size_t d = dim();
  if (raw.size() != d) {
    throw DimensionMismatch("feature vector has " + std::to_string(raw.size()) + " components, models expect " +
                            std::to_string(d));
  }
  const FeatureScaler& sc = normal_.dictionary().scaler;
  std::vector<double> scaled(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    scaled[i] = (raw[i] - sc.means(ii)) / sc.stds(ii);
  }
  std::vector<double> scratch(std::max(normal_.dictionary().sample_count(), tumor_.dictionary().sample_count()));
  Classification out;
  out.err_normal = std::sqrt(normal_.error2(scaled, std::span(scratch.data(), normal_.dictionary().sample_count())));
  out.err_tumor = std::sqrt(tumor_.error2(scaled, std::span(scratch.data(), tumor_.dictionary().sample_count())));
  out.label = decide(out.err_normal, out.err_tumor, rule_);
  return out;
}

Classification classify_vector(std::span<const double> raw, const KernelDictionary& normal,
                               const KernelDictionary& tumor, DecisionRule rule) {
  return TissueClassifier(normal, tumor, rule).classify(raw);
}

SegmentationResult segment_slice(const GrayImage& image, const BinaryMask& valid, const TissueClassifier& classifier,
                                 std::size_t levels, std::size_t threads) {
  if (image.width != valid.width || image.height != valid.height) {
    throw DimensionMismatch("segment: image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                            " but mask is " + std::to_string(valid.width) + "x" + std::to_string(valid.height));
  }
  if (classifier.dim() != kFeatureDim) {
    throw DimensionMismatch("segment: models expect " + std::to_string(classifier.dim()) +
                            "-dimensional vectors, texture descriptors have " + std::to_string(kFeatureDim));
  }
  const std::size_t w = image.width;
  const std::size_t h = image.height;
  SegmentationResult r{BinaryMask(w, h), BinaryMask(w, h), GrayImage(w, h), GrayImage(w, h)};
  parallel_for(h, threads, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (!neighborhood_valid(valid, x, y)) continue;
        const FeatureVector f = patch_features(patch_at(image, x, y), levels);
        const Classification c = classifier.classify(f);
        r.classified.set(x, y, true);
        r.mask.set(x, y, c.label == TissueClass::tumor);
        r.err_normal.at(x, y) = c.err_normal;
        r.err_tumor.at(x, y) = c.err_tumor;
      }
    }
  });
  return r;
}

std::size_t MaskVolume::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

void save_mask_volume(const std::filesystem::path& path, const MaskVolume& mask) {
  GrayVolume v(mask.nx, mask.ny, mask.nz);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) v.voxels[i] = mask.bits[i] ? 1.0 : 0.0;
  save_kvol(path, v);
}

MaskVolume load_mask_volume(const std::filesystem::path& path) {
  const GrayVolume v = load_kvol(path);
  MaskVolume m(v.nx, v.ny, v.nz);
  for (std::size_t i = 0; i < v.voxels.size(); ++i) {
    const double value = v.voxels[i];
    if (value != 0.0 && value != 1.0) {
      throw FormatError(path.string() + ": mask volume voxel " + std::to_string(i) + " is neither 0 nor 1");
    }
    m.bits[i] = value == 1.0 ? 1 : 0;
  }
  return m;
}

namespace {

struct SliceGeometry {
  std::size_t width, height, count;
};

SliceGeometry geometry(std::size_t nx, std::size_t ny, std::size_t nz, Axis axis) {
  switch (axis) {
    case Axis::x: return {ny, nz, nx};
    case Axis::y: return {nx, nz, ny};
    case Axis::z: break;
  }
  return {nx, ny, nz};
}

// Volume index of slice pixel (u, v) at position s along the axis.
std::size_t voxel_of(std::size_t nx, std::size_t ny, Axis axis, std::size_t s, std::size_t u, std::size_t v) {
  switch (axis) {
    case Axis::x: return (v * ny + u) * nx + s;
    case Axis::y: return (v * ny + s) * nx + u;
    case Axis::z: break;
  }
  return (s * ny + v) * nx + u;
}

}  // namespace

GrayImage volume_slice(const GrayVolume& volume, Axis axis, std::size_t index) {
  const SliceGeometry g = geometry(volume.nx, volume.ny, volume.nz, axis);
  if (index >= g.count) throw InvalidArgument("slice index " + std::to_string(index) + " out of range");
  GrayImage img(g.width, g.height);
  for (std::size_t v = 0; v < g.height; ++v)
    for (std::size_t u = 0; u < g.width; ++u) img.at(u, v) = volume.voxels[voxel_of(volume.nx, volume.ny, axis, index, u, v)];
  return img;
}

BinaryMask mask_slice(const MaskVolume& mask, Axis axis, std::size_t index) {
  const SliceGeometry g = geometry(mask.nx, mask.ny, mask.nz, axis);
  if (index >= g.count) throw InvalidArgument("slice index " + std::to_string(index) + " out of range");
  BinaryMask m(g.width, g.height);
  for (std::size_t v = 0; v < g.height; ++v)
    for (std::size_t u = 0; u < g.width; ++u) m.set(u, v, mask.bits[voxel_of(mask.nx, mask.ny, axis, index, u, v)] != 0);
  return m;
}

MaskVolume fuse_majority(const MaskVolume& a, const MaskVolume& b, const MaskVolume& c) {
  const auto same = [&](const MaskVolume& o) { return o.nx == a.nx && o.ny == a.ny && o.nz == a.nz; };
  if (!same(b) || !same(c)) throw DimensionMismatch("fuse: axis masks have different dimensions");
  MaskVolume out(a.nx, a.ny, a.nz);
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const int votes = (a.bits[i] != 0) + (b.bits[i] != 0) + (c.bits[i] != 0);
    out.bits[i] = votes >= 2 ? 1 : 0;
  }
  return out;
}

VolumeSegmentation segment_volume(const GrayVolume& volume, const MaskVolume& valid,
                                  const std::array<const TissueClassifier*, 3>& classifiers, std::size_t levels,
                                  std::size_t threads) {
  if (volume.nx != valid.nx || volume.ny != valid.ny || volume.nz != valid.nz) {
    throw DimensionMismatch("segment-volume: volume and mask dimensions differ");
  }
  for (const TissueClassifier* c : classifiers)
    if (c == nullptr) throw InvalidArgument("segment-volume: one classifier per axis is required");

  VolumeSegmentation out;
  for (std::size_t a = 0; a < 3; ++a) {
    const auto axis = static_cast<Axis>(a);
    const SliceGeometry g = geometry(volume.nx, volume.ny, volume.nz, axis);
    MaskVolume axis_mask(volume.nx, volume.ny, volume.nz);
    for (std::size_t s = 0; s < g.count; ++s) {
      const SegmentationResult r =
          segment_slice(volume_slice(volume, axis, s), mask_slice(valid, axis, s), *classifiers[a], levels, threads);
      for (std::size_t v = 0; v < g.height; ++v)
        for (std::size_t u = 0; u < g.width; ++u)
          axis_mask.bits[voxel_of(volume.nx, volume.ny, axis, s, u, v)] = r.mask.at(u, v) ? 1 : 0;
    }
    out.per_axis[a] = std::move(axis_mask);
  }
  out.fused = fuse_majority(out.per_axis[0], out.per_axis[1], out.per_axis[2]);
  return out;
}

}  // namespace kdlseg
