#include "kdlseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "kdlseg/error.hpp"
#include "kdlseg/parallel.hpp"
#include "kdlseg/simd.hpp"

namespace kdlseg {

void KernelSpec::validate() const {
  if (family == KernelFamily::rbf && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw InvalidArgument("rbf kernel requires gamma > 0");
  }
}

std::string to_string(const KernelSpec& spec) {
  if (spec.family == KernelFamily::linear) return "linear";
  std::ostringstream os;
  os.precision(17);
  os << "rbf(gamma=" << spec.gamma << ")";
  return os.str();
}

namespace {

inline double pair_value(const KernelSpec& spec, const double* a, const double* b, std::size_t dim) noexcept {
  if (spec.family == KernelFamily::linear) return simd::dot(a, b, dim);
  return std::exp(-spec.gamma * simd::squared_distance(a, b, dim));
}

}  // namespace

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionMismatch("kernel_eval: vectors of length " + std::to_string(x.size()) + " and " +
                            std::to_string(y.size()));
  }
  return pair_value(spec, x.data(), y.data(), x.size());
}

double kernel_self(const KernelSpec& spec, std::span<const double> z) {
  if (spec.family == KernelFamily::rbf) return 1.0;
  return simd::dot(z.data(), z.data(), z.size());
}

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& samples, std::size_t block_size,
                     std::size_t threads) {
  spec.validate();
  const auto n = static_cast<std::size_t>(samples.cols());
  const auto dim = static_cast<std::size_t>(samples.rows());
  const std::size_t block = std::max<std::size_t>(1, block_size);
  const std::size_t blocks = (n + block - 1) / block;
  Eigen::MatrixXd k(samples.cols(), samples.cols());
  const double* data = samples.data();

  // Column tile b fills rows [0, end_b) of columns [begin_b, end_b): the upper
  // triangle including the diagonal. Tiles write disjoint columns.
  parallel_for(blocks, threads, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t c0 = b * block;
      const std::size_t c1 = std::min(n, c0 + block);
      for (std::size_t j = c0; j < c1; ++j) {
        const double* yj = data + j * dim;
        double* col = k.col(static_cast<Eigen::Index>(j)).data();
        for (std::size_t i = 0; i <= j; ++i) col[i] = pair_value(spec, data + i * dim, yj, dim);
      }
    }
  });
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = j + 1; i < k.rows(); ++i) k(i, j) = k(j, i);
  return k;
}

void kernel_row_into(const KernelSpec& spec, std::span<const double> z, const Eigen::MatrixXd& samples,
                     std::span<double> out) {
  if (z.size() != static_cast<std::size_t>(samples.rows())) {
    throw DimensionMismatch("kernel_row: vector of length " + std::to_string(z.size()) + " against samples of dimension " +
                            std::to_string(samples.rows()));
  }
  const auto n = static_cast<std::size_t>(samples.cols());
  if (out.size() != n) throw DimensionMismatch("kernel_row: output span has the wrong length");
  if (spec.family == KernelFamily::linear) {
    simd::dot_columns(z.data(), samples.data(), z.size(), n, out.data());
    return;
  }
  simd::squared_distance_columns(z.data(), samples.data(), z.size(), n, out.data());
  for (double& v : out) v = std::exp(-spec.gamma * v);
}

Eigen::VectorXd kernel_row(const KernelSpec& spec, std::span<const double> z, const Eigen::MatrixXd& samples) {
  Eigen::VectorXd row(samples.cols());
  kernel_row_into(spec, z, samples, std::span(row.data(), static_cast<std::size_t>(row.size())));
  return row;
}

}  // namespace kdlseg
