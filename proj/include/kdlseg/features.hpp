#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kdlseg/imaging.hpp"

namespace kdlseg {

/// Length of the texture descriptor.
inline constexpr std::size_t kFeatureDim = 22;
inline constexpr std::size_t kDefaultGlcmLevels = 8;

/// 3×3 neighborhood, row-major, center at index 4.
using Patch3x3 = std::array<double, 9>;

enum class TissueClass : std::uint8_t { normal = 0, tumor = 1, unlabeled = 255 };

const char* to_string(TissueClass c) noexcept;
TissueClass parse_tissue_class(const std::string& name);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
};

/// Population moments of the 9 values; skewness m3/m2^1.5 and (non-excess)
/// kurtosis m4/m2^2, both 0 when the variance is 0.
Moments first_order_stats(const Patch3x3& patch) noexcept;

struct CenterRange {
  double center = 0.0;
  double range = 0.0;
};

CenterRange center_and_range(const Patch3x3& patch) noexcept;

enum class GlcmAngle { deg0, deg45, deg90, deg135 };
inline constexpr std::array<GlcmAngle, 4> kGlcmAngles{GlcmAngle::deg0, GlcmAngle::deg45, GlcmAngle::deg90,
                                                      GlcmAngle::deg135};

/// Normalized symmetric co-occurrence matrix, levels × levels, row-major.
struct Glcm {
  std::size_t levels = 0;
  std::vector<double> p;

  double at(std::size_t i, std::size_t j) const { return p[i * levels + j]; }
};

/// Gray level of a pixel value: floor(v·levels/256), clamped to [0, levels−1].
std::size_t quantize(double value, std::size_t levels) noexcept;

/// Distance-1 co-occurrence at `angle` over the in-patch pairs. Offsets as
/// (row, col): 0°→(0,1), 45°→(−1,1), 90°→(−1,0), 135°→(−1,−1).
Glcm glcm(const Patch3x3& patch, GlcmAngle angle, std::size_t levels = kDefaultGlcmLevels);

struct GlcmFeatures {
  double homogeneity = 0.0;
  double contrast = 0.0;
  double energy = 0.0;
  double entropy = 0.0;  // log base 2
};

GlcmFeatures glcm_features(const Glcm& m) noexcept;

using FeatureVector = std::array<double, kFeatureDim>;

/// Descriptor for a fully populated patch:
/// [mean, variance, skewness, kurtosis, center, range] then
/// [homogeneity, contrast, energy, entropy] for 0°, 45°, 90°, 135°.
FeatureVector patch_features(const Patch3x3& patch, std::size_t levels = kDefaultGlcmLevels);

/// Reads the 3×3 neighborhood around (x, y). Throws InvalidArgument when it
/// leaves the image.
Patch3x3 patch_at(const GrayImage& image, std::size_t x, std::size_t y);

/// True when all 9 neighborhood pixels of (x, y) exist and are valid in `mask`.
bool neighborhood_valid(const BinaryMask& mask, std::size_t x, std::size_t y) noexcept;

/// Throws InvalidArgument when the neighborhood is not fully inside image and mask.
FeatureVector feature_vector(const GrayImage& image, const BinaryMask& mask, std::size_t x, std::size_t y,
                             std::size_t levels = kDefaultGlcmLevels);

struct PixelCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  bool operator==(const PixelCoord&) const = default;
};

/// Column-per-vector feature matrix with labels and (when extracted from an
/// image) pixel coordinates.
struct FeatureSet {
  Eigen::MatrixXd vectors;  // dim × count
  std::vector<TissueClass> labels;
  std::vector<PixelCoord> coords;  // empty when loaded from disk

  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t count() const noexcept { return static_cast<std::size_t>(vectors.cols()); }
  bool empty() const noexcept { return count() == 0; }

  /// Copy holding only the listed columns, in the given order.
  FeatureSet subset(const std::vector<std::size_t>& indices) const;
  /// Indices of vectors carrying `label`, ascending.
  std::vector<std::size_t> indices_of(TissueClass label) const;
  /// Appends `other` (dims must agree unless this set is empty).
  void append(const FeatureSet& other);
};

/// One vector per pixel whose 3×3 neighborhood is fully valid, row-major pixel
/// order. Labels come from `truth` (nonzero → tumor) or are `unlabeled`.
FeatureSet extract_features(const GrayImage& image, const BinaryMask& mask,
                            const std::optional<BinaryMask>& truth = std::nullopt,
                            std::size_t levels = kDefaultGlcmLevels, std::size_t threads = 1);

/// "KDF1": magic, L u32, count u64, count label bytes, then L·count f64 vector-major.
void save_features(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet load_features(const std::filesystem::path& path);

/// Per-dimension z-score statistics.
struct FeatureScaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;

  /// Means 0, stds 1: a no-op scaler of the given dimension.
  static FeatureScaler identity(std::size_t dim);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(means.size()); }
  bool operator==(const FeatureScaler& o) const { return means == o.means && stds == o.stds; }
};

/// Zero-variance dimensions get std 1. Throws on an empty set.
FeatureScaler fit_scaler(const Eigen::MatrixXd& vectors);
Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& vectors, const FeatureScaler& scaler);
Eigen::MatrixXd invert_scaler(const Eigen::MatrixXd& scaled, const FeatureScaler& scaler);

}  // namespace kdlseg
