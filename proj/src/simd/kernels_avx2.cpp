// Compiled with -mavx2 only; reached through avx2_kernels() after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "sknn/simd/kernels.hpp"

namespace sknn::simd {
namespace {

void mismatch_accumulate(std::span<const std::int32_t> column, std::int32_t probe, double weight,
                         std::span<double> acc) {
  const std::size_t n = column.size();
  const __m128i vprobe = _mm_set1_epi32(probe);
  const __m128i ones = _mm_set1_epi32(1);
  const __m256d vw = _mm256_set1_pd(weight);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i codes = _mm_loadu_si128(reinterpret_cast<const __m128i*>(column.data() + i));
    __m128i neq = _mm_andnot_si128(_mm_cmpeq_epi32(codes, vprobe), ones);
    __m256d term = _mm256_mul_pd(vw, _mm256_cvtepi32_pd(neq));
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), term));
  }
  for (; i < n; ++i) acc[i] += weight * (column[i] != probe ? 1.0 : 0.0);
}

void gather_accumulate(std::span<const std::int32_t> column, std::span<const double> row,
                       double coefficient, std::span<double> acc) {
  const std::size_t n = column.size();
  const __m256d vc = _mm256_set1_pd(coefficient);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m128i codes = _mm_loadu_si128(reinterpret_cast<const __m128i*>(column.data() + i));
    __m256d vals = _mm256_i32gather_pd(row.data(), codes, 8);
    __m256d term = _mm256_mul_pd(vc, vals);
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), term));
  }
  for (; i < n; ++i) acc[i] += coefficient * row[column[i]];
}

void sqdiff_accumulate(std::span<const double> column, double probe, double coefficient,
                       std::span<double> acc) {
  const std::size_t n = column.size();
  const __m256d vp = _mm256_set1_pd(probe);
  const __m256d vc = _mm256_set1_pd(coefficient);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(column.data() + i), vp);
    __m256d term = _mm256_mul_pd(vc, _mm256_mul_pd(d, d));
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(_mm256_loadu_pd(acc.data() + i), term));
  }
  for (; i < n; ++i) {
    double d = column[i] - probe;
    acc[i] += coefficient * (d * d);
  }
}

void scale_sqrt(std::span<double> acc, double scale) {
  const std::size_t n = acc.size();
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(_mm256_loadu_pd(acc.data() + i), vs);
    _mm256_storeu_pd(acc.data() + i, _mm256_sqrt_pd(v));
  }
  for (; i < n; ++i) acc[i] = std::sqrt(acc[i] * scale);
}

void l1_rows(std::span<const double> table, std::size_t stride, std::span<const double> probe,
             std::span<double> out) {
  const __m256d signmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double* row = table.data() + r * stride;
    __m256d s = _mm256_setzero_pd();
    for (std::size_t l = 0; l < stride; l += 4) {
      __m256d d = _mm256_sub_pd(_mm256_loadu_pd(row + l), _mm256_loadu_pd(probe.data() + l));
      s = _mm256_add_pd(s, _mm256_and_pd(signmask, d));
    }
    __m128d lo = _mm256_castpd256_pd128(s);
    __m128d hi = _mm256_extractf128_pd(s, 1);
    __m128d pair = _mm_add_pd(lo, hi);
    out[r] = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  }
}

constexpr KernelTable kAvx2{Level::Avx2,      mismatch_accumulate, gather_accumulate,
                            sqdiff_accumulate, scale_sqrt,          l1_rows};

}  // namespace

const KernelTable* avx2_kernels() noexcept { return &kAvx2; }

}  // namespace sknn::simd
