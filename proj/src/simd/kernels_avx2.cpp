// Compiled with -mavx2; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cstdlib>

#include "manin/simd/kernels.hpp"

namespace manin::simd {

void adjoint_heights_avx2(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d0,
                          std::span<std::int32_t> out) {
  const std::int32_t fixed = std::max({a * a, b * b, c * c, std::abs(a * c), 2 * std::abs(a * b)});
  const __m256i vfixed = _mm256_set1_epi32(fixed);
  const __m256i va = _mm256_set1_epi32(a);
  const __m256i vb = _mm256_set1_epi32(b);
  const __m256i v2c = _mm256_set1_epi32(2 * c);
  const __m256i vbc = _mm256_set1_epi32(b * c);
  const __m256i step = _mm256_set1_epi32(8);
  __m256i vd = _mm256_add_epi32(_mm256_set1_epi32(d0), _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7));

  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i h = _mm256_max_epi32(vfixed, _mm256_mullo_epi32(vd, vd));
    h = _mm256_max_epi32(h, _mm256_abs_epi32(_mm256_mullo_epi32(vb, vd)));
    h = _mm256_max_epi32(h, _mm256_abs_epi32(_mm256_mullo_epi32(v2c, vd)));
    h = _mm256_max_epi32(h, _mm256_abs_epi32(_mm256_add_epi32(_mm256_mullo_epi32(va, vd), vbc)));
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out.data() + i), h);
    vd = _mm256_add_epi32(vd, step);
  }
  if (i < n) adjoint_heights_scalar(a, b, c, d0 + static_cast<std::int32_t>(i), out.subspan(i));
}

std::size_t select_below_avx2(std::span<const std::int32_t> heights, std::int32_t threshold,
                              std::uint16_t* idx) {
  const __m256i vt = _mm256_set1_epi32(threshold);
  const std::size_t n = heights.size();
  std::size_t count = 0, i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i h = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(heights.data() + i));
    auto mask = static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(_mm256_cmpgt_epi32(vt, h))));
    while (mask) {
      idx[count++] = static_cast<std::uint16_t>(i + static_cast<unsigned>(__builtin_ctz(mask)));
      mask &= mask - 1;
    }
  }
  for (; i < n; ++i)
    if (heights[i] < threshold) idx[count++] = static_cast<std::uint16_t>(i);
  return count;
}

}  // namespace manin::simd
