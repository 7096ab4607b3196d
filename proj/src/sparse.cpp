#include "kdlseg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kdlseg/error.hpp"

namespace kdlseg {

const char* to_string(KompStop stop) noexcept {
  switch (stop) {
    case KompStop::sparsity_reached:
      return "sparsity_reached";
    case KompStop::residual_exhausted:
      return "residual_exhausted";
    case KompStop::singular_system:
      return "singular_system";
    case KompStop::atoms_exhausted:
      return "atoms_exhausted";
  }
  return "unknown";
}

Eigen::VectorXd SparseCode::dense(std::size_t atoms) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(atoms));
  for (std::size_t s = 0; s < support.size(); ++s) x(static_cast<Eigen::Index>(support[s])) = coefficients[s];
  return x;
}

KompCoder::KompCoder(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& gram) {
  if (gram.rows() != gram.cols() || gram.rows() != coefficients.rows()) {
    throw DimensionMismatch("KompCoder: Gram is " + std::to_string(gram.rows()) + "x" + std::to_string(gram.cols()) +
                            " but A has " + std::to_string(coefficients.rows()) + " rows");
  }
  atom_gram_ = coefficients.transpose() * (gram * coefficients);
  atom_gram_ = 0.5 * (atom_gram_ + atom_gram_.transpose()).eval();
}

KompCoder KompCoder::from_atom_gram(Eigen::MatrixXd atom_gram) {
  if (atom_gram.rows() != atom_gram.cols()) throw DimensionMismatch("KompCoder: atom Gram must be square");
  KompCoder c;
  c.atom_gram_ = std::move(atom_gram);
  return c;
}

SparseCode KompCoder::code(const Eigen::Ref<const Eigen::VectorXd>& projection, std::size_t sparsity) const {
  const auto k = static_cast<Eigen::Index>(atoms());
  if (projection.size() != k) throw DimensionMismatch("komp: projection length differs from the atom count");
  if (sparsity < 1 || sparsity > atoms()) {
    throw InvalidArgument("komp: sparsity " + std::to_string(sparsity) + " not in [1, " + std::to_string(atoms()) + "]");
  }
  const Eigen::MatrixXd& g = atom_gram_;

  SparseCode out;
  out.sparsity_bound = sparsity;
  out.stop = KompStop::sparsity_reached;
  std::vector<char> chosen(atoms(), 0);
  // Lower-triangular Cholesky factor of G_II, grown row by row.
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sparsity), static_cast<Eigen::Index>(sparsity));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(sparsity));
  Eigen::VectorXd x;
  double max_pivot = 0.0;

  for (std::size_t s = 0; s < sparsity; ++s) {
    // τ_i over unselected atoms; ties go to the lowest index
    Eigen::Index best = -1;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (chosen[static_cast<std::size_t>(i)]) continue;
      double tau = projection(i);
      for (std::size_t t = 0; t < out.support.size(); ++t) {
        tau -= x(static_cast<Eigen::Index>(t)) * g(static_cast<Eigen::Index>(out.support[t]), i);
      }
      const double a = std::abs(tau);
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (best < 0) {
      out.stop = KompStop::atoms_exhausted;
      break;
    }
    if (best_abs < kTauThreshold) {
      out.stop = KompStop::residual_exhausted;
      break;
    }

    // extend the factor with the new atom
    const auto m = static_cast<Eigen::Index>(s);
    Eigen::VectorXd w(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      double v = g(static_cast<Eigen::Index>(out.support[static_cast<std::size_t>(r)]), best);
      for (Eigen::Index c = 0; c < r; ++c) v -= chol(r, c) * w(c);
      w(r) = v / chol(r, r);
    }
    const double diag = g(best, best);
    const double pivot = diag - w.squaredNorm();
    if (!(pivot > kPivotTolerance * std::max(max_pivot, diag)) || !std::isfinite(pivot)) {
      out.stop = KompStop::singular_system;
      break;
    }
    max_pivot = std::max(max_pivot, pivot);
    chol.row(m).head(m) = w.transpose();
    chol(m, m) = std::sqrt(pivot);
    chosen[static_cast<std::size_t>(best)] = 1;
    out.support.push_back(static_cast<std::size_t>(best));
    rhs(m) = projection(best);

    // x = (L Lᵀ)⁻¹ b_I
    const Eigen::Index n = m + 1;
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      double v = rhs(r);
      for (Eigen::Index c = 0; c < r; ++c) v -= chol(r, c) * y(c);
      y(r) = v / chol(r, r);
    }
    x.resize(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
      double v = y(r);
      for (Eigen::Index c = r + 1; c < n; ++c) v -= chol(c, r) * x(c);
      x(r) = v / chol(r, r);
    }
  }

  out.coefficients.assign(x.data(), x.data() + out.support.size());
  return out;
}

double KompCoder::error2(const Eigen::Ref<const Eigen::VectorXd>& projection, double self_kernel,
                         const SparseCode& code) const {
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t s = 0; s < code.support.size(); ++s) {
    const auto i = static_cast<Eigen::Index>(code.support[s]);
    linear += projection(i) * code.coefficients[s];
    for (std::size_t t = 0; t < code.support.size(); ++t) {
      quadratic += code.coefficients[s] * code.coefficients[t] * atom_gram_(i, static_cast<Eigen::Index>(code.support[t]));
    }
  }
  return clamp_error2(self_kernel - 2.0 * linear + quadratic, self_kernel);
}

double clamp_error2(double e, double self_kernel) {
  if (e >= 0.0) return e;
  const double tol = 1e-9 * std::max(1.0, std::abs(self_kernel));
  if (e >= -tol) return 0.0;
  throw NumericalError("reconstruction error is negative (" + std::to_string(e) + "); numerical corruption");
}

SparseCode komp(const Eigen::VectorXd& kz, double kzz, const Eigen::MatrixXd& A, const Eigen::MatrixXd& gram,
                std::size_t sparsity) {
  if (kz.size() != A.rows()) throw DimensionMismatch("komp: K(z, Y) length differs from the sample count");
  const KompCoder coder(A, gram);
  const Eigen::VectorXd projection = A.transpose() * kz;
  (void)kzz;  // κ(z,z) only enters the residual, not the greedy choice
  return coder.code(projection, sparsity);
}

double reconstruction_error2(const Eigen::VectorXd& kz, double kzz, const SparseCode& code, const Eigen::MatrixXd& A,
                             const Eigen::MatrixXd& gram) {
  if (kz.size() != A.rows() || gram.rows() != A.rows()) {
    throw DimensionMismatch("reconstruction_error2: inconsistent dimensions");
  }
  const Eigen::VectorXd v = A * code.dense(static_cast<std::size_t>(A.cols()));
  const double e = kzz - 2.0 * kz.dot(v) + v.dot(gram * v);
  return clamp_error2(e, kzz);
}

}  // namespace kdlseg
