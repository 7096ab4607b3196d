#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace kdlseg {

enum class KernelFamily : std::uint8_t { linear = 0, rbf = 1 };

inline constexpr double kDefaultGamma = 0.35;

/// Kernel choice. rbf: exp(−γ‖x−y‖²); linear: x·y.
struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double gamma = kDefaultGamma;

  static KernelSpec rbf(double gamma = kDefaultGamma) { return {KernelFamily::rbf, gamma}; }
  static KernelSpec linear() { return {KernelFamily::linear, 0.0}; }

  /// Throws InvalidArgument when gamma is not positive for rbf.
  void validate() const;
  bool operator==(const KernelSpec&) const = default;
};

std::string to_string(const KernelSpec& spec);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

/// κ(z, z) without touching z's entries for rbf (always 1).
double kernel_self(const KernelSpec& spec, std::span<const double> z);

/// Symmetric Gram matrix K(Y, Y) for the columns of `samples` (dim × N).
/// Tiles of `block_size` columns are computed independently (in parallel when
/// threads > 1); the upper triangle is evaluated once and mirrored. Every
/// entry is a single kernel evaluation, so block size and thread count never
/// change the result.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& samples, std::size_t block_size = 64,
                     std::size_t threads = 1);

/// Row of kernel values κ(z, y_j) over the columns of `samples`.
Eigen::VectorXd kernel_row(const KernelSpec& spec, std::span<const double> z, const Eigen::MatrixXd& samples);

/// Same as kernel_row, writing into `out` (size N) without allocating.
void kernel_row_into(const KernelSpec& spec, std::span<const double> z, const Eigen::MatrixXd& samples,
                     std::span<double> out);

}  // namespace kdlseg
