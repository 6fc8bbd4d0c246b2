#pragma once

// Data-parallel inner loops of the PGL_2 enumeration.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, an AVX2 variant. The variants must agree bit-for-bit with the
// reference; tests/test_simd.cpp checks this on random and edge-case rows.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace manin::simd {

// Largest entry bound for which every intermediate fits in int32
// (|ad + bc| <= 2 B^2 < 2^31).
inline constexpr std::int32_t kMaxEntryBound = 32767;

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

// Writes the adjoint height of [[a, b], [c, d0 + i]] to out[i], for i < out.size().
// The height is the max absolute entry of the content-free adjoint image:
// max(a^2, b^2, c^2, d^2, |ac|, |bd|, 2|ab|, 2|cd|, |ad + bc|).
// Entries must satisfy |a|,|b|,|c|,|d| <= kMaxEntryBound.
using AdjointHeightsFn = void (*)(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d0,
                                  std::span<std::int32_t> out);

// Writes the indices i with heights[i] < threshold to idx (ascending) and
// returns how many. idx must have room for heights.size() entries.
using SelectBelowFn = std::size_t (*)(std::span<const std::int32_t> heights, std::int32_t threshold,
                                      std::uint16_t* idx);

struct Kernels {
  Isa isa;
  AdjointHeightsFn adjoint_heights;
  SelectBelowFn select_below;
};

void adjoint_heights_scalar(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d0,
                            std::span<std::int32_t> out);
std::size_t select_below_scalar(std::span<const std::int32_t> heights, std::int32_t threshold,
                                std::uint16_t* idx);

#if defined(MANIN_HAVE_AVX2)
void adjoint_heights_avx2(std::int32_t a, std::int32_t b, std::int32_t c, std::int32_t d0,
                          std::span<std::int32_t> out);
std::size_t select_below_avx2(std::span<const std::int32_t> heights, std::int32_t threshold,
                              std::uint16_t* idx);
#endif

bool isa_available(Isa isa);

// Kernel table for a given ISA; throws std::invalid_argument if unavailable.
const Kernels& kernels_for(Isa isa);

// Best available ISA, unless overridden by MANIN_SIMD=scalar|avx2 in the environment.
const Kernels& active_kernels();

}  // namespace manin::simd
