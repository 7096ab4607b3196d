#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace kdlseg {

/// 2-D grayscale slice, row-major. Values are kept as doubles through the
/// pipeline and only rounded when normalized or written to disk.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}

  std::size_t size() const noexcept { return pixels.size(); }
  bool empty() const noexcept { return pixels.empty(); }
  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  double& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

/// One bit (stored as a byte, 0 or 1) per pixel; 1 = valid / foreground.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), bits(w * h, fill) {}

  std::size_t size() const noexcept { return bits.size(); }
  bool at(std::size_t x, std::size_t y) const { return bits[y * width + x] != 0; }
  void set(std::size_t x, std::size_t y, bool on) { bits[y * width + x] = on ? 1 : 0; }
  std::size_t count() const noexcept;

  bool operator==(const BinaryMask&) const = default;
};

/// 3-D volume, x-fastest.
struct GrayVolume {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::vector<double> voxels;

  GrayVolume() = default;
  GrayVolume(std::size_t x, std::size_t y, std::size_t z, double fill = 0.0)
      : nx(x), ny(y), nz(z), voxels(x * y * z, fill) {}

  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept { return (z * ny + y) * nx + x; }
  double at(std::size_t x, std::size_t y, std::size_t z) const { return voxels[index(x, y, z)]; }
  double& at(std::size_t x, std::size_t y, std::size_t z) { return voxels[index(x, y, z)]; }

  bool operator==(const GrayVolume&) const = default;
};

GrayImage load_pgm(const std::filesystem::path& path);

/// Pixels are rounded half away from zero; any value outside [0, 255] is an error.
void save_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Foreground written as 255, background as 0.
void save_pgm(const std::filesystem::path& path, const BinaryMask& mask);

/// Loads a PGM and treats every nonzero pixel as foreground.
BinaryMask load_mask_pgm(const std::filesystem::path& path);

/// "KVOL" raw volume: magic, nx/ny/nz as u32 LE, then f64 LE voxels x-fastest.
GrayVolume load_kvol(const std::filesystem::path& path);
void save_kvol(const std::filesystem::path& path, const GrayVolume& volume);

/// Linear min/max stretch onto [0, 255], rounded half away from zero. A
/// constant image maps to all zeros.
GrayImage normalize_intensity(const GrayImage& image);

/// Separable convolution with a sampled Gaussian (2·radius+1 taps, normalized
/// to sum 1). Borders use half-sample symmetric reflection (edge pixel repeated).
GrayImage gaussian_filter(const GrayImage& image, double sigma, std::size_t radius);

/// Normalized 1-D Gaussian taps, index radius is the center.
std::vector<double> gaussian_taps(double sigma, std::size_t radius);

/// Valid-region mask: threshold at fraction·255, keep the largest
/// 4-connected component, then one 3×3 morphological closing.
BinaryMask compute_brain_mask(const GrayImage& image, double threshold_fraction = 0.05);

/// Largest 4-connected component of a mask (ties: the component found first in
/// row-major order).
BinaryMask largest_component(const BinaryMask& mask);

/// 3×3 dilation followed by 3×3 erosion. Outside pixels count as background for
/// the dilation and foreground for the erosion, so the result contains the input.
BinaryMask close3x3(const BinaryMask& mask);

/// Image of a mask (1 → 255).
GrayImage mask_to_image(const BinaryMask& mask);

}  // namespace kdlseg
