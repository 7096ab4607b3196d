#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kdlseg/imaging.hpp"

namespace kdlseg {

/// Gaussian-noise texture: base + amplitude·n + detail·w, where n is
/// unit-variance noise smoothed with a Gaussian of `sigma` pixels (0 = white)
/// and rescaled back to unit variance, and w is unit white noise.
struct TextureParams {
  double base = 0.0;
  double amplitude = 0.0;
  double sigma = 0.0;
  double detail = 0.0;
};

struct Ellipse {
  double cx = 0.0;
  double cy = 0.0;
  double ax = 0.0;  // semi-axis along x
  double ay = 0.0;
  /// Pixel centers (x, y) with ((x−cx)/ax)² + ((y−cy)/ay)² ≤ 1.
  bool contains(double x, double y) const noexcept;
};

struct PhantomSpec {
  std::size_t width = 96;
  std::size_t height = 96;
  TextureParams background{80.0, 4.0, 3.0};
  TextureParams lesion{110.0, 55.0, 0.0};
  Ellipse ellipse{48.0, 48.0, 20.0, 14.0};
  std::uint64_t seed = 1;

  /// Throws InvalidArgument on a degenerate or out-of-frame ellipse, negative
  /// amplitude/sigma or a frame smaller than 3×3.
  void validate() const;
};

struct Phantom {
  GrayImage image;   // integer intensities in [0, 255]
  BinaryMask valid;  // full frame minus a 1-pixel border
  BinaryMask truth;  // ellipse membership
};

Phantom generate_phantom(const PhantomSpec& spec);

/// Spec with a seeded random ellipse for a size×size frame: semi-axes in
/// [size/6, size/3.7], kept at least 4 pixels from the frame edge.
PhantomSpec random_phantom_spec(std::uint64_t seed, std::size_t size = 96);

/// Writes <stem>_image.pgm, <stem>_valid.pgm and <stem>_truth.pgm into `dir`.
void write_phantom(const std::filesystem::path& dir, const std::string& stem, const Phantom& phantom);

/// Seed of the i-th phantom of a series, decorrelated from neighbouring
/// indices and base seeds.
std::uint64_t series_seed(std::uint64_t base_seed, std::uint64_t index) noexcept;

}  // namespace kdlseg
