#pragma once

// Exact exhaustive counting of rational points of bounded height.
//
// All thresholds are strict: a point is counted iff H < T.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace manin::enumeration {

// Multiset {height -> number of points}, complete for every height < bound.
struct HeightSpectrum {
  std::map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t bound = 0;

  // Number of points with height < t; throws DomainError if t > bound.
  std::uint64_t count_below(std::uint64_t t) const;

  // Keeps only heights < t (t <= bound).
  HeightSpectrum truncated(std::uint64_t t) const;

  // Adds the counts of another spectrum with the same bound.
  void merge(const HeightSpectrum& other);

  bool operator==(const HeightSpectrum&) const = default;
};

// Frequencies of the middle Smith exponent k of the adjoint image at p
// (equivalently v_p(det g) for a primitive g).
struct CartanHistogram {
  std::uint64_t p = 0;
  std::map<std::int64_t, std::uint64_t> freq;

  std::uint64_t total() const;
  bool operator==(const CartanHistogram&) const = default;
};

struct Projective {
  int n = 1;
};
struct Pgl2Adjoint {};
struct ProductPgl2 {
  int w1 = 1;
  int w2 = 1;
};
using Target = std::variant<Projective, Pgl2Adjoint, ProductPgl2>;

struct CountQuery {
  Target target;
  std::uint64_t T = 1;
  std::vector<std::uint64_t> primes_tracked;
};

std::string target_name(const Target& t);

struct EnumerationOptions {
  // Upper bound on raw box iterations; exceeding it raises ResourceGuardError.
  std::uint64_t max_work = 40'000'000'000ull;
  // Overrides the entry radius of the PGL_2 box (default floor(sqrt(T))).
  std::optional<std::int32_t> radius;
  // 0 = OpenMP default.
  int threads = 0;
};

// Primitive (n+1)-vectors mod +-1 with max |entry| < T, bucketed by height.
HeightSpectrum count_projective(int n, std::uint64_t T, const EnumerationOptions& opts = {});

struct Pgl2Count {
  HeightSpectrum spectrum;
  std::vector<CartanHistogram> histograms;  // one per tracked prime, same order
};

// PGL_2(Q) points of adjoint height < T, with Cartan statistics at each tracked prime.
Pgl2Count count_pgl2_adjoint(std::uint64_t T, const std::vector<std::uint64_t>& primes_tracked,
                             const EnumerationOptions& opts = {});

// #{(g, h) : H(g)^w1 * H(h)^w2 < T}. Throws DomainError if either spectrum is
// not complete over the range the threshold requires.
std::uint64_t convolve_counts(const HeightSpectrum& s1, const HeightSpectrum& s2, int w1, int w2,
                              std::uint64_t T);

// Empirical frequency of each Cartan gap k; throws DomainError on an empty histogram.
std::map<std::int64_t, double> cartan_statistics(const CartanHistogram& hist);

// Truncated fiber sum  sum_{H(h)^w < cutoff} H(h)^{-exponent}  over a spectrum,
// with a rigorous bound on the omitted tail for PGL_2 adjoint spectra.
struct FiberSum {
  double truncated = 0;
  double tail_bound = 0;
};
FiberSum pgl2_fiber_sum(const HeightSpectrum& fiber, double exponent, std::uint64_t height_cutoff);

// Integer k-th root, floor.
std::uint64_t iroot(std::uint64_t x, int k);

// FNV-1a 64-bit digest (hex) of the canonical "height:count" listing.
std::string spectrum_digest(const HeightSpectrum& s);

}  // namespace manin::enumeration
