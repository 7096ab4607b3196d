#include "kdlseg/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/error.hpp"

namespace kdlseg {

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

namespace {

// Cursor over a PGM header/body that understands '#' comments.
class PgmCursor {
 public:
  PgmCursor(const std::vector<std::uint8_t>& data, const std::filesystem::path& path) : data_(data), path_(path) {}

  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      const auto c = data_[pos_];
      if (c == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_end() const { return pos_ >= data_.size(); }

  unsigned long read_uint(const char* what) {
    skip_space_and_comments();
    if (at_end() || !std::isdigit(data_[pos_])) fail(std::string("expected ") + what);
    unsigned long v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_] - '0');
      if (v > 1'000'000'000UL) fail(std::string(what) + " out of range");
      ++pos_;
    }
    if (pos_ < data_.size() && !std::isspace(data_[pos_]) && data_[pos_] != '#') {
      fail(std::string("malformed ") + what);
    }
    return v;
  }

  std::string read_magic() {
    if (data_.size() < 2) fail("missing magic number");
    std::string magic{static_cast<char>(data_[0]), static_cast<char>(data_[1])};
    pos_ = 2;
    return magic;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("PGM '" + path_.string() + "': " + msg);
  }

 private:
  const std::vector<std::uint8_t>& data_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

std::uint8_t to_byte(double v, const std::filesystem::path& path) {
  if (!std::isfinite(v) || v < 0.0 || v > 255.0) {
    throw InvalidArgument("cannot write '" + path.string() + "': pixel value " + std::to_string(v) +
                          " outside [0, 255]");
  }
  return static_cast<std::uint8_t>(std::round(v));
}

void write_p5(const std::filesystem::path& path, std::size_t w, std::size_t h, const std::vector<std::uint8_t>& raster) {
  io::ByteWriter out;
  out.put_bytes("P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n");
  out.put_bytes(std::span<const std::uint8_t>(raster));
  io::write_file_atomic(path, out.bytes());
}

// Half-sample symmetric reflection of index i into [0, n).
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - 1 - m);
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
  const auto data = io::read_file(path);
  PgmCursor cur(data, path);
  const std::string magic = cur.read_magic();
  if (magic != "P2" && magic != "P5") cur.fail("unsupported magic '" + magic + "' (expected P2 or P5)");

  const auto width = cur.read_uint("width");
  const auto height = cur.read_uint("height");
  const auto maxval = cur.read_uint("maxval");
  if (width == 0 || height == 0) cur.fail("zero image dimension");
  if (maxval == 0 || maxval > 255) cur.fail("maxval " + std::to_string(maxval) + " not in [1, 255]");

  GrayImage img(width, height);
  const std::size_t count = img.size();
  if (magic == "P5") {
    // exactly one whitespace byte separates maxval from the raster
    if (cur.at_end()) cur.fail("missing raster");
    cur.advance(1);
    if (data.size() - cur.pos() != count) {
      cur.fail("raster has " + std::to_string(data.size() - cur.pos()) + " bytes, expected " + std::to_string(count));
    }
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = data[cur.pos() + i];
      if (v > maxval) cur.fail("pixel value exceeds maxval");
      img.pixels[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto v = cur.read_uint("pixel value");
      if (v > maxval) cur.fail("pixel value exceeds maxval");
      img.pixels[i] = static_cast<double>(v);
    }
    cur.skip_space_and_comments();
    if (!cur.at_end()) cur.fail("more pixel values than the header declares");
  }
  return img;
}

void save_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.size() != image.width * image.height || image.empty()) {
    throw InvalidArgument("cannot write '" + path.string() + "': inconsistent image dimensions");
  }
  std::vector<std::uint8_t> raster(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) raster[i] = to_byte(image.pixels[i], path);
  write_p5(path, image.width, image.height, raster);
}

void save_pgm(const std::filesystem::path& path, const BinaryMask& mask) {
  if (mask.size() != mask.width * mask.height || mask.size() == 0) {
    throw InvalidArgument("cannot write '" + path.string() + "': inconsistent mask dimensions");
  }
  std::vector<std::uint8_t> raster(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) raster[i] = mask.bits[i] ? 255 : 0;
  write_p5(path, mask.width, mask.height, raster);
}

BinaryMask load_mask_pgm(const std::filesystem::path& path) {
  const GrayImage img = load_pgm(path);
  BinaryMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) mask.bits[i] = img.pixels[i] != 0.0 ? 1 : 0;
  return mask;
}

GrayVolume load_kvol(const std::filesystem::path& path) {
  const auto data = io::read_file(path);
  io::ByteReader in(data, "KVOL '" + path.string() + "'");
  if (in.get_bytes(4) != "KVOL") throw FormatError("KVOL '" + path.string() + "': bad magic");
  const std::size_t nx = in.get_u32();
  const std::size_t ny = in.get_u32();
  const std::size_t nz = in.get_u32();
  const std::size_t count = nx * ny * nz;
  if (in.remaining() != 8 * count) {
    throw FormatError("KVOL '" + path.string() + "': payload has " + std::to_string(in.remaining()) +
                      " bytes, expected " + std::to_string(8 * count));
  }
  GrayVolume vol(nx, ny, nz);
  in.get_f64s(vol.voxels);
  return vol;
}

void save_kvol(const std::filesystem::path& path, const GrayVolume& volume) {
  if (volume.voxels.size() != volume.nx * volume.ny * volume.nz) {
    throw InvalidArgument("cannot write '" + path.string() + "': inconsistent volume dimensions");
  }
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (volume.nx > kMax || volume.ny > kMax || volume.nz > kMax) {
    throw InvalidArgument("cannot write '" + path.string() + "': dimension exceeds 32 bits");
  }
  io::ByteWriter out;
  out.put_bytes("KVOL");
  out.put_u32(static_cast<std::uint32_t>(volume.nx));
  out.put_u32(static_cast<std::uint32_t>(volume.ny));
  out.put_u32(static_cast<std::uint32_t>(volume.nz));
  out.put_f64s(volume.voxels);
  io::write_file_atomic(path, out.bytes());
}

GrayImage normalize_intensity(const GrayImage& image) {
  if (image.empty()) throw InvalidArgument("normalize_intensity: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(image.pixels.begin(), image.pixels.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  GrayImage out(image.width, image.height, 0.0);
  if (hi == lo) return out;
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < image.size(); ++i) {
    out.pixels[i] = std::round((image.pixels[i] - lo) * scale);
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma, std::size_t radius) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian_filter: sigma must be positive");
  if (radius < 1) throw InvalidArgument("gaussian_filter: radius must be at least 1");
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

GrayImage gaussian_filter(const GrayImage& image, double sigma, std::size_t radius) {
  const auto taps = gaussian_taps(sigma, radius);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const std::size_t w = image.width;
  const std::size_t h = image.height;

  GrayImage rows(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[k + r] * image.at(reflect(static_cast<std::ptrdiff_t>(x) + k, w), y);
      }
      rows.at(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        acc += taps[k + r] * rows.at(x, reflect(static_cast<std::ptrdiff_t>(y) + k, h));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

BinaryMask largest_component(const BinaryMask& mask) {
  const std::size_t w = mask.width;
  const std::size_t h = mask.height;
  std::vector<std::uint32_t> label(mask.size(), 0);
  std::uint32_t best_label = 0;
  std::size_t best_size = 0;
  std::uint32_t next = 0;
  std::queue<std::size_t> frontier;

  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.bits[start] || label[start]) continue;
    ++next;
    std::size_t size = 0;
    label[start] = next;
    frontier.push(start);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop();
      ++size;
      const std::size_t x = p % w;
      const std::size_t y = p / w;
      auto visit = [&](std::size_t q) {
        if (mask.bits[q] && !label[q]) {
          label[q] = next;
          frontier.push(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    if (size > best_size) {
      best_size = size;
      best_label = next;
    }
  }

  BinaryMask out(w, h);
  if (best_label == 0) return out;
  for (std::size_t i = 0; i < mask.size(); ++i) out.bits[i] = label[i] == best_label ? 1 : 0;
  return out;
}

BinaryMask close3x3(const BinaryMask& mask) {
  const auto w = static_cast<std::ptrdiff_t>(mask.width);
  const auto h = static_cast<std::ptrdiff_t>(mask.height);
  auto sample = [&](const BinaryMask& m, std::ptrdiff_t x, std::ptrdiff_t y, bool outside) {
    if (x < 0 || y < 0 || x >= w || y >= h) return outside;
    return m.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };

  BinaryMask dilated(mask.width, mask.height);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      bool any = false;
      for (std::ptrdiff_t dy = -1; dy <= 1 && !any; ++dy)
        for (std::ptrdiff_t dx = -1; dx <= 1 && !any; ++dx) any = sample(mask, x + dx, y + dy, false);
      dilated.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), any);
    }
  }
  BinaryMask closed(mask.width, mask.height);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      bool all = true;
      for (std::ptrdiff_t dy = -1; dy <= 1 && all; ++dy)
        for (std::ptrdiff_t dx = -1; dx <= 1 && all; ++dx) all = sample(dilated, x + dx, y + dy, true);
      closed.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), all);
    }
  }
  return closed;
}

BinaryMask compute_brain_mask(const GrayImage& image, double threshold_fraction) {
  if (image.empty()) throw InvalidArgument("compute_brain_mask: empty image");
  const double threshold = threshold_fraction * 255.0;
  BinaryMask fg(image.width, image.height);
  for (std::size_t i = 0; i < image.size(); ++i) fg.bits[i] = image.pixels[i] >= threshold ? 1 : 0;
  if (fg.count() == 0) {
    throw InvalidArgument("compute_brain_mask: no pixel reaches the threshold " + std::to_string(threshold) +
                          " (empty foreground)");
  }
  return close3x3(largest_component(fg));
}

GrayImage mask_to_image(const BinaryMask& mask) {
  GrayImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask.bits[i] ? 255.0 : 0.0;
  return img;
}

}  // namespace kdlseg
