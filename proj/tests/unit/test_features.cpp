#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "kdlseg/error.hpp"
#include "kdlseg/features.hpp"
#include "oracles.hpp"

using namespace kdlseg;

namespace {

Patch3x3 random_patch(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  Patch3x3 p{};
  for (double& v : p) v = u(rng);
  return p;
}

// Columns at levels 0/1/0 when quantized to 8 levels.
const Patch3x3 kStripes{0, 40, 0, 0, 40, 0, 0, 40, 0};

}  // namespace

TEST_CASE("first-order statistics") {
  const Moments c = first_order_stats({7, 7, 7, 7, 7, 7, 7, 7, 7});
  CHECK(c.mean == 7.0);
  CHECK(c.variance == 0.0);
  CHECK(c.skewness == 0.0);
  CHECK(c.kurtosis == 0.0);

  const Moments r = first_order_stats({1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(r.mean == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(r.variance == doctest::Approx(60.0 / 9.0).epsilon(1e-15));
  CHECK(std::abs(r.skewness) < 1e-15);

  const Moments s = first_order_stats({0, 0, 0, 0, 0, 0, 0, 0, 9});
  CHECK(s.mean == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.variance == doctest::Approx(8.0).epsilon(1e-15));
  // m3 = (8·(−1) + 512)/9 = 56, m4 = (8 + 4096)/9 = 456
  CHECK(s.skewness == doctest::Approx(56.0 / std::pow(8.0, 1.5)).epsilon(1e-14));
  CHECK(s.kurtosis == doctest::Approx(456.0 / 64.0).epsilon(1e-14));
}

TEST_CASE("center and range") {
  CHECK(center_and_range({1, 2, 3, 4, 5, 6, 7, 8, 9}).center == 5.0);
  CHECK(center_and_range({1, 2, 3, 4, 5, 6, 7, 8, 9}).range == 8.0);
  CHECK(center_and_range({3, 3, 3, 3, 3, 3, 3, 3, 3}).range == 0.0);
  const CenterRange cr = center_and_range({10, 0, 0, 0, 200, 0, 0, 0, 255});
  CHECK(cr.center == 200.0);
  CHECK(cr.range == 255.0);
}

TEST_CASE("quantization") {
  CHECK(quantize(0.0, 8) == 0);
  CHECK(quantize(31.999, 8) == 0);
  CHECK(quantize(32.0, 8) == 1);
  CHECK(quantize(255.0, 8) == 7);
  CHECK(quantize(300.0, 8) == 7);
  CHECK(quantize(-5.0, 8) == 0);
}

TEST_CASE("co-occurrence matrices") {
  SUBCASE("constant patch") {
    const Glcm m = glcm({100, 100, 100, 100, 100, 100, 100, 100, 100}, GlcmAngle::deg45);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) CHECK(m.at(i, j) == (i == 3 && j == 3 ? 1.0 : 0.0));
  }
  SUBCASE("stripes at 0 degrees") {
    const Glcm m = glcm(kStripes, GlcmAngle::deg0);
    CHECK(m.at(0, 1) == 0.5);
    CHECK(m.at(1, 0) == 0.5);
    CHECK(m.at(0, 0) == 0.0);
  }
  SUBCASE("stripes at 90 degrees") {
    const Glcm m = glcm(kStripes, GlcmAngle::deg90);
    CHECK(m.at(0, 0) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(m.at(1, 1) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
    CHECK(m.at(0, 1) == 0.0);
  }
}

TEST_CASE("co-occurrence descriptors") {
  Glcm delta{2, {1.0, 0.0, 0.0, 0.0}};
  const GlcmFeatures d = glcm_features(delta);
  CHECK(d.homogeneity == 1.0);
  CHECK(d.contrast == 0.0);
  CHECK(d.energy == 1.0);
  CHECK(d.entropy == 0.0);

  const GlcmFeatures off = glcm_features(Glcm{2, {0.0, 0.5, 0.5, 0.0}});
  CHECK(off.contrast == 1.0);
  CHECK(off.homogeneity == 0.5);
  CHECK(off.energy == 0.5);
  CHECK(off.entropy == 1.0);

  const GlcmFeatures uni = glcm_features(Glcm{2, {0.25, 0.25, 0.25, 0.25}});
  CHECK(uni.energy == 0.25);
  CHECK(uni.entropy == 2.0);
}

TEST_CASE("descriptor layout") {
  const FeatureVector c = patch_features({9, 9, 9, 9, 9, 9, 9, 9, 9});
  const FeatureVector expected{9, 0, 0, 0, 9, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  CHECK(c == expected);
  const FeatureVector s = patch_features(kStripes);
  CHECK(s[6] == 0.5);
  CHECK(s[7] == 1.0);
  CHECK(s[8] == 0.5);
  CHECK(s[9] == 1.0);
}

TEST_CASE("descriptors match the brute-force evaluator on random patches") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const Patch3x3 p = random_patch(rng);
    for (std::size_t levels : {2u, 8u, 16u}) {
      const FeatureVector f = patch_features(p, levels);
      const auto ref = oracle::features(p, levels);
      REQUIRE(ref.size() == kFeatureDim);
      for (std::size_t k = 0; k < kFeatureDim; ++k) {
        CHECK(std::isfinite(f[k]));
        CHECK(std::abs(f[k] - ref[k]) <= 1e-12 * std::max(1.0, std::abs(ref[k])));
      }
    }
  }
}

TEST_CASE("co-occurrence invariants") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 100; ++t) {
    const Patch3x3 p = random_patch(rng);
    for (GlcmAngle a : kGlcmAngles) {
      const Glcm m = glcm(p, a, 8);
      double sum = 0.0;
      for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
          CHECK(m.at(i, j) >= 0.0);
          CHECK(m.at(i, j) == m.at(j, i));
          sum += m.at(i, j);
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      const GlcmFeatures f = glcm_features(m);
      CHECK(f.energy > 0.0);
      CHECK(f.energy <= 1.0);
      CHECK(f.entropy >= 0.0);
      CHECK(f.entropy <= 2.0 * std::log2(8.0) + 1e-12);
      CHECK(f.contrast >= 0.0);
      CHECK(f.homogeneity > 0.0);
      CHECK(f.homogeneity <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("feature_vector is translation covariant and checks its neighborhood") {
  std::mt19937_64 rng(23);
  GrayImage img(12, 10);
  std::uniform_int_distribution<int> u(0, 255);
  for (double& v : img.pixels) v = u(rng);
  GrayImage shifted(14, 13, 0.0);
  for (std::size_t y = 0; y < 10; ++y)
    for (std::size_t x = 0; x < 12; ++x) shifted.at(x + 2, y + 3) = img.at(x, y);
  const BinaryMask all(12, 10, 1), all2(14, 13, 1);
  for (std::size_t y = 1; y + 1 < 10; ++y)
    for (std::size_t x = 1; x + 1 < 12; ++x)
      CHECK(feature_vector(img, all, x, y) == feature_vector(shifted, all2, x + 2, y + 3));

  CHECK_THROWS_AS(feature_vector(img, all, 0, 4), InvalidArgument);
  BinaryMask holed = all;
  holed.set(5, 5, false);
  CHECK_THROWS_AS(feature_vector(img, holed, 4, 4), InvalidArgument);
  CHECK_NOTHROW(feature_vector(img, holed, 7, 7));
}

TEST_CASE("extraction") {
  SUBCASE("5x5 all-valid image gives the 3x3 interior") {
    const FeatureSet s = extract_features(GrayImage(5, 5, 50.0), BinaryMask(5, 5, 1));
    CHECK(s.count() == 9);
    CHECK(s.dim() == kFeatureDim);
    CHECK(s.coords.front() == PixelCoord{1, 1});
    CHECK(s.coords.back() == PixelCoord{3, 3});
    for (TissueClass c : s.labels) CHECK(c == TissueClass::unlabeled);
  }
  SUBCASE("nothing valid") {
    const FeatureSet s = extract_features(GrayImage(5, 5, 50.0), BinaryMask(5, 5, 0));
    CHECK(s.empty());
  }
  SUBCASE("labels follow the truth mask") {
    BinaryMask truth(10, 10);
    for (std::size_t y = 3; y < 7; ++y)
      for (std::size_t x = 2; x < 6; ++x) truth.set(x, y, true);
    const FeatureSet s = extract_features(GrayImage(10, 10, 80.0), BinaryMask(10, 10, 1), truth);
    std::size_t tumor = 0, normal = 0;
    for (std::size_t y = 1; y < 9; ++y)
      for (std::size_t x = 1; x < 9; ++x) (truth.at(x, y) ? tumor : normal)++;
    CHECK(s.indices_of(TissueClass::tumor).size() == tumor);
    CHECK(s.indices_of(TissueClass::normal).size() == normal);
    CHECK(tumor == 16);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(extract_features(GrayImage(5, 5), BinaryMask(4, 5, 1)), DimensionMismatch);
  }
}

TEST_CASE("extraction count equals the brute-force count and does not depend on threads") {
  std::mt19937_64 rng(24);
  std::bernoulli_distribution b(0.8);
  std::uniform_int_distribution<int> u(0, 255);
  for (int t = 0; t < 5; ++t) {
    GrayImage img(20, 17);
    for (double& v : img.pixels) v = u(rng);
    BinaryMask mask(20, 17);
    for (auto& v : mask.bits) v = b(rng) ? 1 : 0;
    std::size_t expected = 0;
    for (std::size_t y = 1; y + 1 < 17; ++y)
      for (std::size_t x = 1; x + 1 < 20; ++x) {
        bool ok = true;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) ok = ok && mask.at(x + dx, y + dy);
        expected += ok;
      }
    const FeatureSet one = extract_features(img, mask, std::nullopt, 8, 1);
    const FeatureSet four = extract_features(img, mask, std::nullopt, 8, 4);
    CHECK(one.count() == expected);
    CHECK(one.vectors == four.vectors);
    CHECK(one.coords == four.coords);
  }
}

TEST_CASE("KDF1 round trip and rejection of corrupt files") {
  const auto dir = oracle::scratch_dir("features_kdf");
  std::mt19937_64 rng(25);
  FeatureSet s;
  s.vectors = oracle::random_matrix(rng, kFeatureDim, 7, -1e6, 1e6);
  s.labels = {TissueClass::normal, TissueClass::tumor,     TissueClass::unlabeled, TissueClass::tumor,
              TissueClass::normal, TissueClass::unlabeled, TissueClass::normal};
  save_features(dir / "a.kdf", s);
  const FeatureSet back = load_features(dir / "a.kdf");
  CHECK(back.vectors == s.vectors);
  CHECK(back.labels == s.labels);
  auto bytes = oracle::file_bytes(dir / "a.kdf");
  CHECK(bytes.size() == 4 + 4 + 8 + 7 + 8 * kFeatureDim * 7);

  const auto rewrite = [&](const char* name, std::vector<std::uint8_t> b) {
    std::ofstream(dir / name, std::ios::binary).write(reinterpret_cast<const char*>(b.data()),
                                                      static_cast<std::streamsize>(b.size()));
    return dir / name;
  };
  auto magic = bytes;
  magic[3] = '2';
  CHECK_THROWS_AS(load_features(rewrite("m.kdf", magic)), FormatError);
  auto label = bytes;
  label[16] = 7;
  CHECK_THROWS_AS(load_features(rewrite("l.kdf", label)), FormatError);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(load_features(rewrite("c.kdf", cut)), FormatError);
  auto count = bytes;
  count[8] = 200;
  CHECK_THROWS_AS(load_features(rewrite("n.kdf", count)), FormatError);
}

TEST_CASE("feature set helpers") {
  FeatureSet s;
  s.vectors = Eigen::MatrixXd::Identity(3, 3);
  s.labels = {TissueClass::tumor, TissueClass::normal, TissueClass::tumor};
  CHECK(s.indices_of(TissueClass::tumor) == std::vector<std::size_t>{0, 2});
  const FeatureSet sub = s.subset({2, 1});
  CHECK(sub.vectors.col(0) == s.vectors.col(2));
  CHECK(sub.labels == std::vector<TissueClass>{TissueClass::tumor, TissueClass::normal});
  FeatureSet joined;
  joined.append(s);
  joined.append(sub);
  CHECK(joined.count() == 5);
  FeatureSet other;
  other.vectors = Eigen::MatrixXd::Zero(2, 1);
  other.labels = {TissueClass::normal};
  CHECK_THROWS_AS(joined.append(other), DimensionMismatch);
  CHECK(parse_tissue_class("tumor") == TissueClass::tumor);
  CHECK(std::string(to_string(TissueClass::normal)) == "normal");
  CHECK_THROWS_AS(parse_tissue_class("edema"), InvalidArgument);
}

TEST_CASE("scaler") {
  std::mt19937_64 rng(26);
  Eigen::MatrixXd v = oracle::random_matrix(rng, 4, 30, -5.0, 9.0);
  v.row(2).setConstant(5.0);
  const FeatureScaler sc = fit_scaler(v);
  CHECK(sc.stds(2) == 1.0);
  const Eigen::MatrixXd z = apply_scaler(v, sc);
  for (Eigen::Index d = 0; d < 4; ++d) {
    const double mean = z.row(d).mean();
    CHECK(std::abs(mean) < 1e-12);
    if (d == 2) {
      CHECK(z.row(d).cwiseAbs().maxCoeff() == 0.0);
    } else {
      const double var = z.row(d).squaredNorm() / 30.0;
      CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK((invert_scaler(z, sc) - v).cwiseAbs().maxCoeff() <= 1e-12 * v.cwiseAbs().maxCoeff());

  const FeatureScaler single = fit_scaler(Eigen::MatrixXd::Constant(3, 1, 4.5));
  CHECK(apply_scaler(Eigen::MatrixXd::Constant(3, 1, 4.5), single).isZero(0.0));
  CHECK_THROWS(fit_scaler(Eigen::MatrixXd(3, 0)));
  CHECK_THROWS_AS(apply_scaler(v, FeatureScaler::identity(3)), DimensionMismatch);
  CHECK(apply_scaler(v, FeatureScaler::identity(4)) == v);
}
