#include "kdlseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kdlseg/binary_io.hpp"
#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"

namespace kdlseg {

const char* to_string(TissueClass c) noexcept {
  switch (c) {
    case TissueClass::normal:
      return "normal";
    case TissueClass::tumor:
      return "tumor";
    case TissueClass::unlabeled:
      return "unlabeled";
  }
  return "unknown";
}

TissueClass parse_tissue_class(const std::string& name) {
  if (name == "normal") return TissueClass::normal;
  if (name == "tumor") return TissueClass::tumor;
  throw InvalidArgument("unknown tissue class '" + name + "' (expected normal or tumor)");
}

Moments first_order_stats(const Patch3x3& patch) noexcept {
  double sum = 0.0;
  for (double v : patch) sum += v;
  Moments m;
  m.mean = sum / 9.0;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : patch) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= 9.0;
  m3 /= 9.0;
  m4 /= 9.0;
  m.variance = m2;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.kurtosis = m4 / (m2 * m2);
  }
  return m;
}

CenterRange center_and_range(const Patch3x3& patch) noexcept {
  const auto [lo, hi] = std::minmax_element(patch.begin(), patch.end());
  return {patch[4], *hi - *lo};
}

std::size_t quantize(double value, std::size_t levels) noexcept {
  const double q = std::floor(value * static_cast<double>(levels) / 256.0);
  if (!(q > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(q), levels - 1);
}

Glcm glcm(const Patch3x3& patch, GlcmAngle angle, std::size_t levels) {
  if (levels < 2) throw InvalidArgument("glcm: at least 2 gray levels required");
  int dr = 0, dc = 0;
  switch (angle) {
    case GlcmAngle::deg0:
      dr = 0, dc = 1;
      break;
    case GlcmAngle::deg45:
      dr = -1, dc = 1;
      break;
    case GlcmAngle::deg90:
      dr = -1, dc = 0;
      break;
    case GlcmAngle::deg135:
      dr = -1, dc = -1;
      break;
  }
  std::array<std::size_t, 9> q{};
  for (std::size_t i = 0; i < 9; ++i) q[i] = quantize(patch[i], levels);

  Glcm m{levels, std::vector<double>(levels * levels, 0.0)};
  std::size_t pairs = 0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int r2 = r + dr;
      const int c2 = c + dc;
      if (r2 < 0 || r2 > 2 || c2 < 0 || c2 > 2) continue;
      const std::size_t a = q[r * 3 + c];
      const std::size_t b = q[r2 * 3 + c2];
      m.p[a * levels + b] += 1.0;
      m.p[b * levels + a] += 1.0;
      ++pairs;
    }
  }
  const double total = 2.0 * static_cast<double>(pairs);
  for (double& v : m.p) v /= total;
  return m;
}

GlcmFeatures glcm_features(const Glcm& m) noexcept {
  GlcmFeatures f;
  for (std::size_t i = 0; i < m.levels; ++i) {
    for (std::size_t j = 0; j < m.levels; ++j) {
      const double p = m.at(i, j);
      if (p == 0.0) continue;
      const double diff = static_cast<double>(i) - static_cast<double>(j);
      f.contrast += p * diff * diff;
      f.homogeneity += p / (1.0 + std::abs(diff));
      f.energy += p * p;
      f.entropy -= p * std::log2(p);
    }
  }
  return f;
}

FeatureVector patch_features(const Patch3x3& patch, std::size_t levels) {
  FeatureVector v{};
  const Moments mo = first_order_stats(patch);
  const CenterRange cr = center_and_range(patch);
  v[0] = mo.mean;
  v[1] = mo.variance;
  v[2] = mo.skewness;
  v[3] = mo.kurtosis;
  v[4] = cr.center;
  v[5] = cr.range;
  std::size_t k = 6;
  for (GlcmAngle angle : kGlcmAngles) {
    const GlcmFeatures g = glcm_features(glcm(patch, angle, levels));
    v[k++] = g.homogeneity;
    v[k++] = g.contrast;
    v[k++] = g.energy;
    v[k++] = g.entropy;
  }
  return v;
}

Patch3x3 patch_at(const GrayImage& image, std::size_t x, std::size_t y) {
  if (x < 1 || y < 1 || x + 1 >= image.width || y + 1 >= image.height) {
    throw InvalidArgument("3x3 neighborhood of (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") leaves the image");
  }
  Patch3x3 p{};
  std::size_t k = 0;
  for (std::size_t yy = y - 1; yy <= y + 1; ++yy)
    for (std::size_t xx = x - 1; xx <= x + 1; ++xx) p[k++] = image.at(xx, yy);
  return p;
}

bool neighborhood_valid(const BinaryMask& mask, std::size_t x, std::size_t y) noexcept {
  if (x < 1 || y < 1 || x + 1 >= mask.width || y + 1 >= mask.height) return false;
  for (std::size_t yy = y - 1; yy <= y + 1; ++yy)
    for (std::size_t xx = x - 1; xx <= x + 1; ++xx)
      if (!mask.at(xx, yy)) return false;
  return true;
}

FeatureVector feature_vector(const GrayImage& image, const BinaryMask& mask, std::size_t x, std::size_t y,
                             std::size_t levels) {
  if (mask.width != image.width || mask.height != image.height) {
    throw DimensionMismatch("feature_vector: mask and image dimensions differ");
  }
  if (!neighborhood_valid(mask, x, y)) {
    throw InvalidArgument("feature_vector: neighborhood of (" + std::to_string(x) + ", " + std::to_string(y) +
                          ") is not fully inside the valid region");
  }
  return patch_features(patch_at(image, x, y), levels);
}

FeatureSet FeatureSet::subset(const std::vector<std::size_t>& indices) const {
  FeatureSet out;
  out.vectors.resize(vectors.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  const bool with_coords = coords.size() == count();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= count()) throw InvalidArgument("FeatureSet::subset: index " + std::to_string(i) + " out of range");
    out.vectors.col(static_cast<Eigen::Index>(k)) = vectors.col(static_cast<Eigen::Index>(i));
    out.labels.push_back(labels[i]);
    if (with_coords) out.coords.push_back(coords[i]);
  }
  return out;
}

std::vector<std::size_t> FeatureSet::indices_of(TissueClass label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

void FeatureSet::append(const FeatureSet& other) {
  if (other.empty()) return;
  if (empty()) {
    const bool keep_coords = coords.size() == count();
    *this = FeatureSet{other.vectors, other.labels, keep_coords ? other.coords : std::vector<PixelCoord>{}};
    return;
  }
  if (other.dim() != dim()) throw DimensionMismatch("FeatureSet::append: feature dimensions differ");
  const bool keep_coords = coords.size() == count() && other.coords.size() == other.count();
  Eigen::MatrixXd merged(vectors.rows(), vectors.cols() + other.vectors.cols());
  merged << vectors, other.vectors;
  vectors = std::move(merged);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  if (keep_coords) {
    coords.insert(coords.end(), other.coords.begin(), other.coords.end());
  } else {
    coords.clear();
  }
}

FeatureSet extract_features(const GrayImage& image, const BinaryMask& mask, const std::optional<BinaryMask>& truth,
                            std::size_t levels, std::size_t threads) {
  if (mask.width != image.width || mask.height != image.height) {
    throw DimensionMismatch("extract_features: mask is " + std::to_string(mask.width) + "x" +
                            std::to_string(mask.height) + ", image is " + std::to_string(image.width) + "x" +
                            std::to_string(image.height));
  }
  if (truth && (truth->width != image.width || truth->height != image.height)) {
    throw DimensionMismatch("extract_features: label mask dimensions differ from the image");
  }

  FeatureSet out;
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      if (neighborhood_valid(mask, x, y))
        out.coords.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});

  const std::size_t n = out.coords.size();
  out.vectors.resize(static_cast<Eigen::Index>(kFeatureDim), static_cast<Eigen::Index>(n));
  out.labels.resize(n, TissueClass::unlabeled);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PixelCoord c = out.coords[i];
      const FeatureVector f = patch_features(patch_at(image, c.x, c.y), levels);
      std::copy(f.begin(), f.end(), out.vectors.col(static_cast<Eigen::Index>(i)).data());
      if (truth) out.labels[i] = truth->at(c.x, c.y) ? TissueClass::tumor : TissueClass::normal;
    }
  });
  return out;
}

void save_features(const std::filesystem::path& path, const FeatureSet& set) {
  if (set.labels.size() != set.count()) throw InvalidArgument("save_features: label count differs from vector count");
  if (set.dim() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("save_features: dimension too large");
  io::ByteWriter out;
  out.put_bytes("KDF1");
  out.put_u32(static_cast<std::uint32_t>(set.dim()));
  out.put_u64(set.count());
  for (TissueClass c : set.labels) out.put_u8(static_cast<std::uint8_t>(c));
  out.put_f64s(std::span(set.vectors.data(), static_cast<std::size_t>(set.vectors.size())));
  io::write_file_atomic(path, out.bytes());
}

FeatureSet load_features(const std::filesystem::path& path) {
  const auto data = io::read_file(path);
  const std::string what = "KDF1 '" + path.string() + "'";
  io::ByteReader in(data, what);
  if (in.get_bytes(4) != "KDF1") throw FormatError(what + ": bad magic");
  const std::size_t dim = in.get_u32();
  const std::uint64_t count = in.get_u64();
  if (dim == 0 && count != 0) throw FormatError(what + ": zero feature dimension");
  // reject absurd counts before allocating
  if (count > in.remaining() || (dim != 0 && count * (1 + 8 * dim) != in.remaining())) {
    throw FormatError(what + ": payload size does not match header (truncated or corrupt)");
  }
  FeatureSet set;
  set.labels.resize(count);
  for (auto& label : set.labels) {
    const auto b = in.get_u8();
    if (b != 0 && b != 1 && b != 255) throw FormatError(what + ": invalid label byte " + std::to_string(b));
    label = static_cast<TissueClass>(b);
  }
  set.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  in.get_f64s(std::span(set.vectors.data(), static_cast<std::size_t>(set.vectors.size())));
  in.expect_end();
  return set;
}

FeatureScaler FeatureScaler::identity(std::size_t dim) {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim)), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim))};
}

FeatureScaler fit_scaler(const Eigen::MatrixXd& vectors) {
  if (vectors.cols() == 0) throw InvalidArgument("fit_scaler: empty feature set");
  const double n = static_cast<double>(vectors.cols());
  FeatureScaler s;
  s.means = vectors.rowwise().sum() / n;
  s.stds.resize(vectors.rows());
  for (Eigen::Index d = 0; d < vectors.rows(); ++d) {
    const double var = (vectors.row(d).array() - s.means(d)).square().sum() / n;
    const double sd = std::sqrt(var);
    // a constant column can leave rounding residue in the variance
    s.stds(d) = sd > 1e-12 * std::max(1.0, std::abs(s.means(d))) ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd apply_scaler(const Eigen::MatrixXd& vectors, const FeatureScaler& scaler) {
  if (static_cast<std::size_t>(vectors.rows()) != scaler.dim()) {
    throw DimensionMismatch("apply_scaler: scaler dimension differs from the features");
  }
  return (vectors.colwise() - scaler.means).array().colwise() / scaler.stds.array();
}

Eigen::MatrixXd invert_scaler(const Eigen::MatrixXd& scaled, const FeatureScaler& scaler) {
  if (static_cast<std::size_t>(scaled.rows()) != scaler.dim()) {
    throw DimensionMismatch("invert_scaler: scaler dimension differs from the features");
  }
  return (scaled.array().colwise() * scaler.stds.array()).matrix().colwise() + scaler.means;
}

}  // namespace kdlseg
