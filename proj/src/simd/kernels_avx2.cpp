// Built with -mavx2 -mfma. Nothing in this file may be called unless the
// dispatcher has confirmed CPU support.

#include "kdlseg/simd.hpp"

#include <cmath>

#if defined(KDLSEG_HAVE_AVX2_TU)
#include <immintrin.h>
#endif

namespace kdlseg::simd::avx2 {

#if defined(KDLSEG_HAVE_AVX2_TU)

namespace {

// Fixed reduction order: ((l0 + l1) + (l2 + l3)).
inline double horizontal_sum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair_lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
  const __m128d pair_hi = _mm_add_sd(hi, _mm_unpackhi_pd(hi, hi));
  return _mm_cvtsd_f64(_mm_add_sd(pair_lo, pair_hi));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  if (i + 4 <= n) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    i += 4;
  }
  double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept {
  std::size_t j = 0;
  for (; j + 16 <= count; j += 16) {
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();
    __m256d a3 = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const __m256d zd = _mm256_broadcast_sd(z + d);
      const double* row = panel + d * ld + j;
      a0 = _mm256_fmadd_pd(zd, _mm256_loadu_pd(row), a0);
      a1 = _mm256_fmadd_pd(zd, _mm256_loadu_pd(row + 4), a1);
      a2 = _mm256_fmadd_pd(zd, _mm256_loadu_pd(row + 8), a2);
      a3 = _mm256_fmadd_pd(zd, _mm256_loadu_pd(row + 12), a3);
    }
    _mm256_storeu_pd(out + j, a0);
    _mm256_storeu_pd(out + j + 4, a1);
    _mm256_storeu_pd(out + j + 8, a2);
    _mm256_storeu_pd(out + j + 12, a3);
  }
  for (; j + 4 <= count; j += 4) {
    __m256d a0 = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      a0 = _mm256_fmadd_pd(_mm256_broadcast_sd(z + d), _mm256_loadu_pd(panel + d * ld + j), a0);
    }
    _mm256_storeu_pd(out + j, a0);
  }
  // Same fused sequence as the vector lanes, so a value never depends on its position.
  for (; j < count; ++j) {
    double acc = 0.0;
    for (std::size_t d = 0; d < dim; ++d) acc = std::fma(z[d], panel[d * ld + j], acc);
    out[j] = acc;
  }
}

void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept {
  const double* z0 = z;
  const double* z1 = z + z_stride;
  const double* z2 = z + 2 * z_stride;
  const double* z3 = z + 3 * z_stride;
  std::size_t j = 0;
  for (; j + 8 <= count; j += 8) {
    __m256d a00 = _mm256_setzero_pd(), a01 = _mm256_setzero_pd();
    __m256d a10 = _mm256_setzero_pd(), a11 = _mm256_setzero_pd();
    __m256d a20 = _mm256_setzero_pd(), a21 = _mm256_setzero_pd();
    __m256d a30 = _mm256_setzero_pd(), a31 = _mm256_setzero_pd();
    for (std::size_t d = 0; d < dim; ++d) {
      const double* row = panel + d * ld + j;
      const __m256d p0 = _mm256_loadu_pd(row);
      const __m256d p1 = _mm256_loadu_pd(row + 4);
      __m256d b = _mm256_broadcast_sd(z0 + d);
      a00 = _mm256_fmadd_pd(b, p0, a00);
      a01 = _mm256_fmadd_pd(b, p1, a01);
      b = _mm256_broadcast_sd(z1 + d);
      a10 = _mm256_fmadd_pd(b, p0, a10);
      a11 = _mm256_fmadd_pd(b, p1, a11);
      b = _mm256_broadcast_sd(z2 + d);
      a20 = _mm256_fmadd_pd(b, p0, a20);
      a21 = _mm256_fmadd_pd(b, p1, a21);
      b = _mm256_broadcast_sd(z3 + d);
      a30 = _mm256_fmadd_pd(b, p0, a30);
      a31 = _mm256_fmadd_pd(b, p1, a31);
    }
    _mm256_storeu_pd(out + j, a00);
    _mm256_storeu_pd(out + j + 4, a01);
    _mm256_storeu_pd(out + out_ld + j, a10);
    _mm256_storeu_pd(out + out_ld + j + 4, a11);
    _mm256_storeu_pd(out + 2 * out_ld + j, a20);
    _mm256_storeu_pd(out + 2 * out_ld + j + 4, a21);
    _mm256_storeu_pd(out + 3 * out_ld + j, a30);
    _mm256_storeu_pd(out + 3 * out_ld + j + 4, a31);
  }
  if (j < count) {
    for (std::size_t r = 0; r < 4; ++r) dot_panel(z + r * z_stride, panel + j, ld, dim, count - j, out + r * out_ld + j);
  }
}

#else

// Non-x86 builds: the dispatcher never selects this level, but the symbols
// must exist for the equivalence tests to link.
double dot(const double* a, const double* b, std::size_t n) noexcept { return scalar::dot(a, b, n); }

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  return scalar::squared_distance(a, b, n);
}

void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept {
  scalar::dot_panel(z, panel, ld, dim, count, out);
}

void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept {
  scalar::dot_panel4(z, z_stride, panel, ld, dim, count, out, out_ld);
}

#endif

}  // namespace kdlseg::simd::avx2
