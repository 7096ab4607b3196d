// Runtime selection between the scalar and AVX2 kernels. No intrinsics here.

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kdlseg/simd.hpp"

namespace kdlseg::simd {

namespace {

using PairKernel = double (*)(const double*, const double*, std::size_t) noexcept;

using PanelKernel = void (*)(const double*, const double*, std::size_t, std::size_t, std::size_t, double*) noexcept;

using Panel4Kernel = void (*)(const double*, std::size_t, const double*, std::size_t, std::size_t, std::size_t,
                              double*, std::size_t) noexcept;

struct KernelTable {
  PairKernel dot;
  PairKernel squared_distance;
  PanelKernel dot_panel;
  Panel4Kernel dot_panel4;
};

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::squared_distance, &scalar::dot_panel, &scalar::dot_panel4};
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::squared_distance, &avx2::dot_panel, &avx2::dot_panel4};

bool cpu_has_avx2() noexcept {
#if defined(KDLSEG_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Level initial_level() noexcept {
  if (const char* env = std::getenv("KDLSEG_SIMD"); env && std::strcmp(env, "scalar") == 0) {
    return Level::scalar;
  }
  return cpu_has_avx2() ? Level::avx2 : Level::scalar;
}

const KernelTable* table_for(Level level) noexcept {
  return level == Level::avx2 ? &kAvx2Table : &kScalarTable;
}

std::atomic<Level>& level_slot() noexcept {
  static std::atomic<Level> slot{initial_level()};
  return slot;
}

std::atomic<const KernelTable*>& table_slot() noexcept {
  static std::atomic<const KernelTable*> slot{table_for(level_slot().load())};
  return slot;
}

inline const KernelTable& table() noexcept { return *table_slot().load(std::memory_order_acquire); }

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return true;
    case Level::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Level active_level() noexcept { return level_slot().load(); }

Level set_level(Level level) noexcept {
  if (!supported(level)) level = Level::scalar;
  level_slot().store(level);
  table_slot().store(table_for(level), std::memory_order_release);
  return level;
}

double dot(const double* a, const double* b, std::size_t n) noexcept { return table().dot(a, b, n); }

double squared_distance(const double* a, const double* b, std::size_t n) noexcept {
  return table().squared_distance(a, b, n);
}

void dot_columns(const double* z, const double* columns, std::size_t dim, std::size_t count,
                 double* out) noexcept {
  const PairKernel kernel = table().dot;
  for (std::size_t j = 0; j < count; ++j) out[j] = kernel(z, columns + j * dim, dim);
}

void squared_distance_columns(const double* z, const double* columns, std::size_t dim,
                              std::size_t count, double* out) noexcept {
  const PairKernel kernel = table().squared_distance;
  for (std::size_t j = 0; j < count; ++j) out[j] = kernel(z, columns + j * dim, dim);
}

void dot_panel(const double* z, const double* panel, std::size_t ld, std::size_t dim, std::size_t count,
               double* out) noexcept {
  table().dot_panel(z, panel, ld, dim, count, out);
}

void dot_panel4(const double* z, std::size_t z_stride, const double* panel, std::size_t ld, std::size_t dim,
                std::size_t count, double* out, std::size_t out_ld) noexcept {
  table().dot_panel4(z, z_stride, panel, ld, dim, count, out, out_ld);
}

}  // namespace kdlseg::simd
