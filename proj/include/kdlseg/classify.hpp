#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kdlseg/dictionary.hpp"
#include "kdlseg/features.hpp"
#include "kdlseg/imaging.hpp"
#include "kdlseg/sparse.hpp"

namespace kdlseg {

/// How the two reconstruction errors map to a label.
///   min_error: normal iff err_N < err_T (the dictionary that fits better wins).
///   inverted:  normal iff err_N > err_T (the inverted comparison, kept for experiments).
/// Ties are tumor under both rules.
enum class DecisionRule : std::uint8_t { min_error, inverted };

TissueClass decide(double err_normal, double err_tumor, DecisionRule rule) noexcept;

struct Classification {
  TissueClass label = TissueClass::tumor;
  double err_normal = 0.0;  // RMSE, √ of the squared feature-space residual
  double err_tumor = 0.0;
};

/// Dictionary with its training Gram and atom Gram cached for repeated coding.
class PreparedDictionary {
 public:
  explicit PreparedDictionary(KernelDictionary dict, std::size_t threads = 1);

  const KernelDictionary& dictionary() const noexcept { return dict_; }

  /// Squared residual of an already scaled vector. `scratch` must hold
  /// sample_count() values.
  double error2(std::span<const double> scaled, std::span<double> scratch) const;

 private:
  KernelDictionary dict_;
  KompCoder coder_;
};

/// Pair of class dictionaries sharing kernel, scaler and feature dimension.
class TissueClassifier {
 public:
  /// Throws InvalidArgument when the dictionaries disagree on kernel, scaler
  /// or dimension, or when their class tags are not normal/tumor.
  TissueClassifier(KernelDictionary normal, KernelDictionary tumor, DecisionRule rule = DecisionRule::min_error,
                   std::size_t threads = 1);

  std::size_t dim() const noexcept { return normal_.dictionary().dim(); }
  DecisionRule rule() const noexcept { return rule_; }

  /// Classifies a raw (unscaled) feature vector.
  Classification classify(std::span<const double> raw) const;

 private:
  PreparedDictionary normal_;
  PreparedDictionary tumor_;
  DecisionRule rule_;
};

/// Convenience wrapper building a one-off classifier.
Classification classify_vector(std::span<const double> raw, const KernelDictionary& normal,
                               const KernelDictionary& tumor, DecisionRule rule = DecisionRule::min_error);

struct SegmentationResult {
  BinaryMask mask;        // 1 = tumor
  BinaryMask classified;  // pixels with a fully valid neighborhood
  GrayImage err_normal;   // 0 where not classified
  GrayImage err_tumor;
};

/// Classifies every pixel whose 3×3 neighborhood lies inside `valid`; all
/// other pixels stay background. Output does not depend on `threads`.
SegmentationResult segment_slice(const GrayImage& image, const BinaryMask& valid, const TissueClassifier& classifier,
                                 std::size_t levels = kDefaultGlcmLevels, std::size_t threads = 1);

/// Binary volume, x-fastest, values 0/1.
struct MaskVolume {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::vector<std::uint8_t> bits;

  MaskVolume() = default;
  MaskVolume(std::size_t x, std::size_t y, std::size_t z, std::uint8_t fill = 0)
      : nx(x), ny(y), nz(z), bits(x * y * z, fill) {}

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept { return (z * ny + y) * nx + x; }
  bool at(std::size_t x, std::size_t y, std::size_t z) const { return bits[index(x, y, z)] != 0; }
  std::size_t count() const noexcept;
  bool operator==(const MaskVolume&) const = default;
};

/// Written as KVOL with voxel values 0.0/1.0.
void save_mask_volume(const std::filesystem::path& path, const MaskVolume& mask);
/// Any voxel value other than 0 or 1 is a format error.
MaskVolume load_mask_volume(const std::filesystem::path& path);

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

/// Slice of a volume at position `index` along `axis`:
/// x → (width ny, height nz), y → (nx, nz), z → (nx, ny).
GrayImage volume_slice(const GrayVolume& volume, Axis axis, std::size_t index);
BinaryMask mask_slice(const MaskVolume& mask, Axis axis, std::size_t index);

/// Voxel-wise majority (at least two of three).
MaskVolume fuse_majority(const MaskVolume& a, const MaskVolume& b, const MaskVolume& c);

struct VolumeSegmentation {
  MaskVolume fused;
  std::array<MaskVolume, 3> per_axis;
};

/// Segments every slice along each axis with that axis's classifier, then
/// fuses the three votes per voxel.
VolumeSegmentation segment_volume(const GrayVolume& volume, const MaskVolume& valid,
                                  const std::array<const TissueClassifier*, 3>& classifiers,
                                  std::size_t levels = kDefaultGlcmLevels, std::size_t threads = 1);

}  // namespace kdlseg
