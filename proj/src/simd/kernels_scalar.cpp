#include "kdlseg/simd.hpp"

namespace kdlseg::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept {
  for (std::size_t j = 0; j < count; ++j) out[j] = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double zd = z[d];
    const double* row = panel + d * ld;
    for (std::size_t j = 0; j < count; ++j) out[j] += zd * row[j];
  }
}

void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept {
  for (std::size_t r = 0; r < 4; ++r) dot_panel(z + r * z_stride, panel, ld, dim, count, out + r * out_ld);
}

}  // namespace kdlseg::simd::scalar
