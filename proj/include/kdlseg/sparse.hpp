#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace kdlseg {

/// Why a KOMP run ended.
enum class KompStop {
  sparsity_reached,  // |support| == T0
  residual_exhausted,  // every remaining |τ| fell below the threshold
  singular_system,  // next atom was numerically dependent on the support
  atoms_exhausted,  // all atoms already selected
};

const char* to_string(KompStop stop) noexcept;

/// Sparse code over a dictionary's atoms.
struct SparseCode {
  std::vector<std::size_t> support;  // selection order
  std::vector<double> coefficients;  // aligned with support
  std::size_t sparsity_bound = 0;
  KompStop stop = KompStop::sparsity_reached;

  bool empty() const noexcept { return support.empty(); }
  /// Stopped because the restricted system became singular.
  bool flagged() const noexcept { return stop == KompStop::singular_system; }
  /// Dense coefficient vector of length `atoms`.
  Eigen::VectorXd dense(std::size_t atoms) const;
};

inline constexpr double kTauThreshold = 1e-12;
inline constexpr double kPivotTolerance = 1e-10;

/// Kernel OMP against a fixed dictionary Φ(Y)A.
///
/// The coder caches the atom Gram G = AᵀK(Y,Y)A. For a target z the selection
/// score of atom i is τ_i = (K(z,Y) − v_sᵀK(Y,Y))a_i, which with b = AᵀK(Y,z)
/// and v_s = A_I x_s reduces to b_i − Σ_s x_s G(I_s, i). The restricted normal
/// equations G_II x = b_I are solved through a Cholesky factor grown one atom
/// at a time; an atom whose new pivot is at most kPivotTolerance times the
/// largest pivot is rejected and coding stops there.
class KompCoder {
 public:
  KompCoder() = default;
  /// `coefficients` is N×K, `gram` the N×N Gram of the training samples.
  KompCoder(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& gram);

  /// Builds a coder from a precomputed atom Gram AᵀKA (K×K).
  static KompCoder from_atom_gram(Eigen::MatrixXd atom_gram);

  std::size_t atoms() const noexcept { return static_cast<std::size_t>(atom_gram_.rows()); }
  const Eigen::MatrixXd& atom_gram() const noexcept { return atom_gram_; }

  /// Codes a target given its projection b = AᵀK(Y, z).
  SparseCode code(const Eigen::Ref<const Eigen::VectorXd>& projection, std::size_t sparsity) const;

  /// Feature-space squared residual ‖Φ(z) − Φ(Y)Ax‖² from the projection.
  double error2(const Eigen::Ref<const Eigen::VectorXd>& projection, double self_kernel,
                const SparseCode& code) const;

 private:
  Eigen::MatrixXd atom_gram_;
};

/// One-shot KOMP: kz = K(z, Y), kzz = κ(z, z), A is N×K, gram is K(Y, Y).
SparseCode komp(const Eigen::VectorXd& kz, double kzz, const Eigen::MatrixXd& A, const Eigen::MatrixXd& gram,
                std::size_t sparsity);

/// κ(z,z) − 2K(z,Y)Ax + xᵀAᵀK(Y,Y)Ax, evaluated through v = Ax. Values in
/// [−1e-9·max(1, κ(z,z)), 0) are clamped to 0; anything more negative throws
/// NumericalError.
double reconstruction_error2(const Eigen::VectorXd& kz, double kzz, const SparseCode& code, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& gram);

/// Clamp rule shared by every squared-error evaluation.
double clamp_error2(double e, double self_kernel);

}  // namespace kdlseg
