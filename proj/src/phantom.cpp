#include "kdlseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "kdlseg/error.hpp"

namespace kdlseg {

bool Ellipse::contains(double x, double y) const noexcept {
  const double u = (x - cx) / ax;
  const double v = (y - cy) / ay;
  return u * u + v * v <= 1.0;
}

void PhantomSpec::validate() const {
  if (width < 3 || height < 3) throw InvalidArgument("phantom: frame must be at least 3x3");
  const auto check_texture = [](const TextureParams& t, const char* what) {
    if (!std::isfinite(t.base) || !std::isfinite(t.amplitude) || !std::isfinite(t.sigma) ||
        !std::isfinite(t.detail) || t.amplitude < 0.0 || t.sigma < 0.0 || t.detail < 0.0) {
      throw InvalidArgument(std::string("phantom: invalid ") + what + " texture");
    }
  };
  check_texture(background, "background");
  check_texture(lesion, "lesion");
  const Ellipse& e = ellipse;
  if (!(e.ax > 0.0) || !(e.ay > 0.0) || !std::isfinite(e.ax) || !std::isfinite(e.ay) || !std::isfinite(e.cx) ||
      !std::isfinite(e.cy)) {
    throw InvalidArgument("phantom: degenerate ellipse (semi-axes must be positive)");
  }
  if (e.cx - e.ax < 0.0 || e.cy - e.ay < 0.0 || e.cx + e.ax > static_cast<double>(width - 1) ||
      e.cy + e.ay > static_cast<double>(height - 1)) {
    throw InvalidArgument("phantom: ellipse extends outside the frame");
  }
}

namespace {

// Box-Muller on top of mt19937_64 so that the stream is identical on every
// standard library (std::normal_distribution is implementation-defined).
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

GrayImage texture(std::size_t w, std::size_t h, const TextureParams& t, NormalSource& noise) {
  GrayImage field(w, h);
  for (double& v : field.pixels) v = noise.next();
  if (t.sigma > 0.0) {
    const auto radius = static_cast<std::size_t>(std::max(1.0, std::ceil(3.0 * t.sigma)));
    field = gaussian_filter(field, t.sigma, radius);
    double mean = 0.0;
    for (double v : field.pixels) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field.pixels) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double sd = std::sqrt(var);
    if (sd > 0.0)
      for (double& v : field.pixels) v = (v - mean) / sd;
  }
  for (double& v : field.pixels) v = t.base + t.amplitude * v;
  if (t.detail > 0.0)
    for (double& v : field.pixels) v += t.detail * noise.next();
  return field;
}

double clamp_round(double v) { return std::round(std::clamp(v, 0.0, 255.0)); }

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  const std::size_t w = spec.width;
  const std::size_t h = spec.height;
  NormalSource noise(spec.seed);
  const GrayImage bg = texture(w, h, spec.background, noise);
  const GrayImage lesion = texture(w, h, spec.lesion, noise);

  Phantom p{GrayImage(w, h), BinaryMask(w, h), BinaryMask(w, h)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const bool inside = spec.ellipse.contains(static_cast<double>(x), static_cast<double>(y));
      p.truth.set(x, y, inside);
      p.valid.set(x, y, x > 0 && y > 0 && x + 1 < w && y + 1 < h);
      p.image.at(x, y) = clamp_round(inside ? lesion.at(x, y) : bg.at(x, y));
    }
  }
  return p;
}

PhantomSpec random_phantom_spec(std::uint64_t seed, std::size_t size) {
  if (size < 32) throw InvalidArgument("phantom: size must be at least 32");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  const double s = static_cast<double>(size);
  const double margin = 4.0;
  PhantomSpec spec;
  spec.width = size;
  spec.height = size;
  spec.seed = seed;
  spec.ellipse.ax = uniform(s / 6.0, s / 3.7);
  spec.ellipse.ay = uniform(s / 6.0, s / 3.7);
  spec.ellipse.cx = uniform(spec.ellipse.ax + margin, s - 1.0 - spec.ellipse.ax - margin);
  spec.ellipse.cy = uniform(spec.ellipse.ay + margin, s - 1.0 - spec.ellipse.ay - margin);
  return spec;
}

void write_phantom(const std::filesystem::path& dir, const std::string& stem, const Phantom& phantom) {
  std::filesystem::create_directories(dir);
  save_pgm(dir / (stem + "_image.pgm"), phantom.image);
  save_pgm(dir / (stem + "_valid.pgm"), phantom.valid);
  save_pgm(dir / (stem + "_truth.pgm"), phantom.truth);
}

std::uint64_t series_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = base_seed * 0x100000001b3ULL + index + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace kdlseg
