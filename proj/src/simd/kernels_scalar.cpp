#include <algorithm>
#include <cstdlib>

#include "manin/simd/kernels.hpp"

namespace manin::simd {

void adjoint_heights_scalar(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d0,
                            std::span<std::int32_t> out) {
  const std::int64_t A = a, B = b, C = c;
  const std::int64_t fixed = std::max({A * A, B * B, C * C, std::abs(A * C), 2 * std::abs(A * B)});
  const std::int64_t bc = B * C;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::int64_t d = d0 + static_cast<std::int64_t>(i);
    const std::int64_t h =
        std::max({fixed, d * d, std::abs(B * d), 2 * std::abs(C * d), std::abs(A * d + bc)});
    out[i] = static_cast<std::int32_t>(h);
  }
}

std::size_t select_below_scalar(std::span<const std::int32_t> heights, std::int32_t threshold,
                                std::uint16_t* idx) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < heights.size(); ++i)
    if (heights[i] < threshold) idx[n++] = static_cast<std::uint16_t>(i);
  return n;
}

}  // namespace manin::simd
