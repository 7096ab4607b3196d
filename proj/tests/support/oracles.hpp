#pragma once
// Brute-force reference implementations used by the tests. None of them call
// into the library's numerical code; they work on explicit vectors and plain
// loops so that agreement is meaningful.

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// ---- random data -----------------------------------------------------------

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                              double hi = 1.0);

// ---- sparse coding ---------------------------------------------------------

struct OmpResult {
  std::vector<std::size_t> support;
  std::vector<double> coefficients;
};

/// Textbook OMP on explicit atoms (columns of D): pick argmax |d_iᵀr| over
/// unused atoms (first index on ties), refit by least squares via QR, repeat.
/// Stops early when the best |d_iᵀr| falls below 1e-12.
OmpResult omp(const Eigen::MatrixXd& D, const Eigen::VectorXd& y, std::size_t sparsity);

struct KsvdCurve {
  std::vector<double> coding_error;   // after sparse coding
  std::vector<double> updated_error;  // after the atom sweep
  Eigen::MatrixXd dictionary;         // final explicit atoms
};

/// Classical K-SVD on explicit data Y (columns are signals) starting from
/// explicit atoms D0. Per atom: SVD of the restricted residual, atom = u₁,
/// row = σ₁v₁ᵀ, with v₁'s first entry above 1e-8·max|v₁| made positive. An
/// unused atom (or σ₁² < 1e-12) becomes the normalized worst-represented
/// signal not yet used as a replacement in the same sweep.
KsvdCurve ksvd(const Eigen::MatrixXd& Y, Eigen::MatrixXd D0, std::size_t sparsity, std::size_t iterations);

// ---- features --------------------------------------------------------------

using Patch = std::array<double, 9>;

struct BruteMoments {
  double mean, variance, skewness, kurtosis;
};
BruteMoments moments(const Patch& p);

/// levels×levels co-occurrence matrix by enumerating every ordered pixel pair
/// of the patch and testing whether the second is the first plus the offset.
std::vector<double> glcm(const Patch& p, int drow, int dcol, std::size_t levels);

struct BruteGlcmFeatures {
  double homogeneity, contrast, energy, entropy;
};
BruteGlcmFeatures glcm_features(const std::vector<double>& m, std::size_t levels);

/// The 22-component descriptor assembled from the functions above.
std::vector<double> features(const Patch& p, std::size_t levels);

// ---- selection -------------------------------------------------------------

/// Greedy selection recomputed from scratch at every step with a two-pass
/// Pearson correlation evaluated per pair.
std::vector<std::size_t> greedy_select(const Eigen::MatrixXd& own, const Eigen::MatrixXd& other, std::size_t n);

double pearson(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// ---- metrics ---------------------------------------------------------------

struct Counts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};
Counts confusion(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth,
                 const std::vector<std::uint8_t>& eval);

// ---- misc ------------------------------------------------------------------

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path);

}  // namespace oracle
