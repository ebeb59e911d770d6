#pragma once

// Data-parallel inner loops of the nearest-neighbour scan.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 variant compiled in its own translation unit with
// -mavx2. The variant is picked once at runtime from CPUID; SKNN_SIMD=scalar
// (or avx2) forces a level. Element-wise kernels produce bit-identical
// results across levels; l1_rows may differ in the last bits because the
// vector version reassociates the sum over labels.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sknn::simd {

enum class Level { Scalar, Avx2 };

std::string_view to_string(Level level) noexcept;

struct KernelTable {
  Level level;

  /// acc[i] += weight * (column[i] != probe)
  void (*mismatch_accumulate)(std::span<const std::int32_t> column, std::int32_t probe,
                              double weight, std::span<double> acc);
  /// acc[i] += coefficient * row[column[i]]; codes must index into `row`.
  void (*gather_accumulate)(std::span<const std::int32_t> column, std::span<const double> row,
                            double coefficient, std::span<double> acc);
  /// acc[i] += coefficient * (column[i] - probe)^2
  void (*sqdiff_accumulate)(std::span<const double> column, double probe, double coefficient,
                            std::span<double> acc);
  /// acc[i] = sqrt(acc[i] * scale)
  void (*scale_sqrt)(std::span<double> acc, double scale);
  /// out[r] = sum_l |table[r * stride + l] - probe[l]|, l < stride.
  /// `stride` is a multiple of 4 and probe.size() == stride.
  void (*l1_rows)(std::span<const double> table, std::size_t stride, std::span<const double> probe,
                  std::span<double> out);
};

const KernelTable& scalar_kernels() noexcept;
/// nullptr when the build has no AVX2 translation unit.
const KernelTable* avx2_kernels() noexcept;

bool cpu_supports(Level level) noexcept;
/// Best level supported by this CPU, unless overridden by SKNN_SIMD.
Level detect_level() noexcept;
/// Throws std::invalid_argument if `level` is unavailable here.
const KernelTable& kernels_for(Level level);
/// Table for detect_level(), resolved once.
const KernelTable& active_kernels() noexcept;

}  // namespace sknn::simd
