#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kdlseg/features.hpp"
#include "kdlseg/kernels.hpp"

namespace kdlseg {

/// Dictionary D = Φ(Y)A in the feature space of `kernel`. Atoms are the
/// columns of A; each satisfies a_kᵀK(Y,Y)a_k = 1.
struct KernelDictionary {
  TissueClass tissue = TissueClass::normal;
  KernelSpec kernel;
  FeatureScaler scaler;
  std::size_t sparsity = 3;
  Eigen::MatrixXd samples;       // L × N, already scaled
  Eigen::MatrixXd coefficients;  // N × K

  std::size_t dim() const noexcept { return static_cast<std::size_t>(samples.rows()); }
  std::size_t sample_count() const noexcept { return static_cast<std::size_t>(samples.cols()); }
  std::size_t atom_count() const noexcept { return static_cast<std::size_t>(coefficients.cols()); }
};

struct TrainParams {
  std::size_t atoms = 32;
  std::size_t sparsity = 3;
  KernelSpec kernel = KernelSpec::rbf();
  std::size_t max_iters = 20;
  double tol = 1e-4;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t block_size = 64;
};

struct IterationStats {
  double coding_error = 0.0;   // after Stage 1, with the previous atoms
  double updated_error = 0.0;  // after Stage 2, with updated atoms and coefficient rows
  std::size_t replaced_atoms = 0;
  double max_norm_deviation = 0.0;  // max_k |a_kᵀKa_k − 1| after Stage 2
  double coding_ms = 0.0;
  double update_ms = 0.0;
};

struct TrainReport {
  std::size_t atoms = 0;
  std::size_t sparsity = 0;
  std::size_t samples = 0;
  double initial_error = 0.0;  // Stage-1 coding error of the initial dictionary
  std::vector<IterationStats> iterations;
  bool converged = false;
  double gram_ms = 0.0;
  double total_ms = 0.0;
  std::vector<std::string> warnings;

  /// Error after the last completed stage (initial_error when no iteration ran).
  double final_error() const noexcept {
    return iterations.empty() ? initial_error : iterations.back().updated_error;
  }
};

/// One seeded-random row set to 1 per column (rows distinct while K ≤ N),
/// then each column scaled to unit feature-space norm.
Eigen::MatrixXd init_dictionary(std::size_t samples, std::size_t atoms, const Eigen::MatrixXd& gram,
                                std::uint64_t seed);

/// Sparse codes (K × N, dense storage) of every training sample.
struct CodingResult {
  Eigen::MatrixXd codes;
  Eigen::VectorXd sample_errors;
  double total_error = 0.0;
  std::size_t flagged = 0;  // codes that stopped on a singular system
};

CodingResult code_training_set(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                               std::size_t sparsity, std::size_t threads = 1);

/// Per-sample squared feature-space residuals ‖Φ(y_i) − Φ(Y)Ax_i‖².
Eigen::VectorXd sample_errors(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                              const Eigen::MatrixXd& codes);

/// diag(AᵀKA).
Eigen::VectorXd atom_norms2(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients);

struct IterationResult {
  Eigen::MatrixXd coefficients;  // A after Stage 2
  Eigen::MatrixXd codes;         // X after Stage 2 (rows of updated atoms rewritten)
  IterationStats stats;
};

/// One kernel K-SVD pass: KOMP coding of every sample, then rank-1 updates
/// of the atoms in ascending order.
///
/// For atom k with users ω_k, the restricted error E_k^R = (I − Σ_{j≠k} a_j x^j)Ω_k
/// is formed in coefficient space, the top eigenpair (σ₁², v₁) of
/// (E_k^R)ᵀK(E_k^R) gives a_k ← σ₁⁻¹E_k^R v₁ and the atom's coefficient row
/// over ω_k ← σ₁v₁ᵀ. v₁'s sign is fixed so its first significant entry is
/// positive. An atom with no users or σ₁² < 1e-12 is replaced by the
/// normalized indicator of the worst-represented sample not already used
/// as a replacement in this pass.
IterationResult kksvd_iteration(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& coefficients,
                                std::size_t sparsity, std::size_t threads = 1);

/// Runs kksvd_iteration until `max_iters` or until the relative improvement
/// of the post-update error drops below `tol`. `samples` must already be scaled.
std::pair<KernelDictionary, TrainReport> train(const Eigen::MatrixXd& samples, const TrainParams& params,
                                               TissueClass tissue = TissueClass::normal,
                                               const FeatureScaler& scaler = {});

/// "KDL1" model file, version 1.
void save_model(const std::filesystem::path& path, const KernelDictionary& dict);
KernelDictionary load_model(const std::filesystem::path& path);

inline constexpr std::uint8_t kModelVersion = 1;

}  // namespace kdlseg
