#pragma once

// Vector kernels behind every kernel evaluation, Gram block and correlation
// sum. Each kernel has a scalar reference and an AVX2 variant; the variant is
// chosen once at runtime from the CPU's capabilities and can be pinned for
// equivalence testing.

#include <cstddef>
#include <string_view>

namespace kdlseg::simd {

enum class Level { scalar, avx2 };

std::string_view to_string(Level level) noexcept;

/// True when the library was built with the variant and the running CPU can execute it.
bool supported(Level level) noexcept;

/// Level currently used by the dispatching entry points. Starts at the best
/// supported level unless KDLSEG_SIMD=scalar is set in the environment.
Level active_level() noexcept;

/// Pins the dispatch level. Requests for an unsupported level fall back to scalar.
/// Returns the level actually installed.
Level set_level(Level level) noexcept;

/// Σ a[i]·b[i].
double dot(const double* a, const double* b, std::size_t n) noexcept;

/// Σ (a[i] − b[i])², evaluated term by term (never via the expanded ‖a‖²+‖b‖²−2a·b form).
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;

/// out[j] = dot(z, columns + j·dim) for j < count. `columns` is column-major, dim × count.
void dot_columns(const double* z, const double* columns, std::size_t dim, std::size_t count,
                 double* out) noexcept;

/// out[j] = squared_distance(z, columns + j·dim) for j < count.
void squared_distance_columns(const double* z, const double* columns, std::size_t dim,
                              std::size_t count, double* out) noexcept;

/// out[j] = Σ_d z[d]·panel[d·ld + j] for j < count, accumulated in ascending d.
/// `panel` is the transposed layout (one row of `ld` values per dimension), so
/// the variant can vectorize across j. Each output is computed identically
/// whatever its position, so results do not depend on how callers chunk j.
void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept;

/// dot_panel for four query vectors at once: row r uses z + r·z_stride and
/// writes out + r·out_ld. Every value is bit-identical to the single-row call.
void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept;

/// Per-variant entry points, exposed so tests can compare them directly.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept;
void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept;
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept;
void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept;
}  // namespace avx2

}  // namespace kdlseg::simd
