#include <cstdlib>
#include <stdexcept>
#include <string>

#include "manin/simd/kernels.hpp"

namespace manin::simd {

namespace {

constexpr Kernels kScalar{Isa::Scalar, &adjoint_heights_scalar, &select_below_scalar};
#if defined(MANIN_HAVE_AVX2)
constexpr Kernels kAvx2{Isa::Avx2, &adjoint_heights_avx2, &select_below_avx2};
#endif

const Kernels& pick() {
  if (const char* env = std::getenv("MANIN_SIMD")) {
    std::string want(env);
    if (want == "scalar") return kScalar;
    if (want == "avx2") return kernels_for(Isa::Avx2);
    throw std::invalid_argument("MANIN_SIMD must be 'scalar' or 'avx2', got '" + want + "'");
  }
  return isa_available(Isa::Avx2) ? kernels_for(Isa::Avx2) : kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(MANIN_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels_for(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument(std::string("ISA not available: ") + std::string(isa_name(isa)));
#if defined(MANIN_HAVE_AVX2)
  if (isa == Isa::Avx2) return kAvx2;
#endif
  return kScalar;
}

const Kernels& active_kernels() {
  static const Kernels& k = pick();
  return k;
}

}  // namespace manin::simd
