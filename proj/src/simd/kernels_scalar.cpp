#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "sknn/simd/kernels.hpp"

namespace sknn::simd {
namespace {

void mismatch_accumulate(std::span<const std::int32_t> column, std::int32_t probe, double weight,
                         std::span<double> acc) {
  for (std::size_t i = 0; i < column.size(); ++i) {
    acc[i] += weight * (column[i] != probe ? 1.0 : 0.0);
  }
}

void gather_accumulate(std::span<const std::int32_t> column, std::span<const double> row,
                       double coefficient, std::span<double> acc) {
  for (std::size_t i = 0; i < column.size(); ++i) acc[i] += coefficient * row[column[i]];
}

void sqdiff_accumulate(std::span<const double> column, double probe, double coefficient,
                       std::span<double> acc) {
  for (std::size_t i = 0; i < column.size(); ++i) {
    double d = column[i] - probe;
    acc[i] += coefficient * (d * d);
  }
}

void scale_sqrt(std::span<double> acc, double scale) {
  for (auto& a : acc) a = std::sqrt(a * scale);
}

void l1_rows(std::span<const double> table, std::size_t stride, std::span<const double> probe,
             std::span<double> out) {
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = table.data() + r * stride;
    double s = 0.0;
    for (std::size_t l = 0; l < stride; ++l) s += std::fabs(row[l] - probe[l]);
    out[r] = s;
  }
}

constexpr KernelTable kScalar{Level::Scalar,    mismatch_accumulate, gather_accumulate,
                              sqdiff_accumulate, scale_sqrt,          l1_rows};

}  // namespace

std::string_view to_string(Level level) noexcept {
  return level == Level::Avx2 ? "avx2" : "scalar";
}

const KernelTable& scalar_kernels() noexcept { return kScalar; }

#ifndef SKNN_HAVE_AVX2
const KernelTable* avx2_kernels() noexcept { return nullptr; }
#endif

bool cpu_supports(Level level) noexcept {
  switch (level) {
    case Level::Scalar: return true;
    case Level::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Level detect_level() noexcept {
  if (const char* forced = std::getenv("SKNN_SIMD")) {
    std::string_view f(forced);
    if (f == "scalar") return Level::Scalar;
    if (f == "avx2" && cpu_supports(Level::Avx2)) return Level::Avx2;
  }
  return cpu_supports(Level::Avx2) ? Level::Avx2 : Level::Scalar;
}

const KernelTable& kernels_for(Level level) {
  if (!cpu_supports(level)) {
    throw std::invalid_argument("SIMD level '" + std::string(to_string(level)) + "' unavailable");
  }
  return level == Level::Avx2 ? *avx2_kernels() : kScalar;
}

const KernelTable& active_kernels() noexcept {
  static const KernelTable& table = kernels_for(detect_level());
  return table;
}

}  // namespace sknn::simd
