#include "manin/enumeration.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "manin/errors.hpp"
#include "manin/heights.hpp"
#include "manin/simd/kernels.hpp"

namespace manin::enumeration {

namespace {

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw ResourceGuardError("64-bit counter overflow");
  return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw ResourceGuardError("64-bit counter overflow");
  return r;
}

// pow that reports overflow past `cap` as cap.
std::uint64_t pow_capped(std::uint64_t base, int e, std::uint64_t cap) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (__builtin_mul_overflow(r, base, &r) || r >= cap) return cap;
  }
  return r;
}

HeightSpectrum from_dense(const std::vector<std::uint64_t>& dense, std::uint64_t bound) {
  HeightSpectrum s;
  s.bound = bound;
  for (std::size_t h = 0; h < dense.size(); ++h) {
    if (!dense[h]) continue;
    s.counts.emplace(h, dense[h]);
    s.total = checked_add(s.total, dense[h]);
  }
  return s;
}

// coprime[r] != 0 iff gcd(r, g) == 1, for r in [0, g).
std::vector<std::uint8_t> coprime_table(std::uint32_t g) {
  std::vector<std::uint8_t> t(g, 1);
  if (g == 1) return t;  // gcd(0, 1) = 1
  std::uint32_t m = g;
  for (std::uint32_t p = 2; p * p <= m; ++p) {
    if (m % p) continue;
    while (m % p == 0) m /= p;
    for (std::uint32_t r = 0; r < g; r += p) t[r] = 0;
  }
  if (m > 1)
    for (std::uint32_t r = 0; r < g; r += m) t[r] = 0;
  return t;
}

std::uint64_t work_estimate(std::uint64_t side, int dims) {
  return pow_capped(side, dims, UINT64_MAX);
}

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

std::uint64_t HeightSpectrum::count_below(std::uint64_t t) const {
  if (t > bound)
    throw DomainError("spectrum complete below " + std::to_string(bound) + " queried at " + std::to_string(t));
  std::uint64_t n = 0;
  for (auto it = counts.begin(); it != counts.end() && it->first < t; ++it) n = checked_add(n, it->second);
  return n;
}

HeightSpectrum HeightSpectrum::truncated(std::uint64_t t) const {
  if (t > bound) throw DomainError("cannot truncate a spectrum above its bound");
  HeightSpectrum s;
  s.bound = t;
  for (auto it = counts.begin(); it != counts.end() && it->first < t; ++it) {
    s.counts.insert(*it);
    s.total = checked_add(s.total, it->second);
  }
  return s;
}

void HeightSpectrum::merge(const HeightSpectrum& other) {
  if (other.bound != bound) throw DomainError("merging spectra with different bounds");
  for (const auto& [h, c] : other.counts) counts[h] = checked_add(counts[h], c);
  total = checked_add(total, other.total);
}

std::uint64_t CartanHistogram::total() const {
  std::uint64_t n = 0;
  for (const auto& [k, c] : freq) n = checked_add(n, c);
  return n;
}

std::string target_name(const Target& t) {
  struct V {
    std::string operator()(const Projective& p) const { return "projective:" + std::to_string(p.n); }
    std::string operator()(const Pgl2Adjoint&) const { return "pgl2-adjoint"; }
    std::string operator()(const ProductPgl2& p) const {
      return "product:" + std::to_string(p.w1) + "," + std::to_string(p.w2);
    }
  };
  return std::visit(V{}, t);
}

std::uint64_t iroot(std::uint64_t x, int k) {
  if (k < 1) throw DomainError("iroot: k must be >= 1");
  if (k == 1 || x < 2) return x;
  // r^k <= x, exactly, with overflow counting as "too big"
  auto fits = [x, k](std::uint64_t r) {
    std::uint64_t v = 1;
    for (int i = 0; i < k; ++i)
      if (__builtin_mul_overflow(v, r, &v)) return false;
    return v <= x;
  };
  auto r = static_cast<std::uint64_t>(std::pow(static_cast<long double>(x), 1.0L / k));
  while (r > 0 && !fits(r)) --r;
  while (fits(r + 1)) ++r;
  return r;
}

HeightSpectrum count_projective(int n, std::uint64_t T, const EnumerationOptions& opts) {
  if (n < 1 || n > 4) throw DomainError("count_projective supports 1 <= n <= 4");
  if (T < 1) throw DomainError("threshold must be >= 1");
  if (T > (1ull << 31)) throw ResourceGuardError("count_projective: threshold beyond 2^31");
  if (work_estimate(2 * T, n + 1) > opts.max_work)
    throw ResourceGuardError("count_projective: (2T)^(n+1) exceeds the work guard");

  const auto lim = static_cast<std::int64_t>(T) - 1;  // |x| <= lim
  std::vector<std::uint64_t> dense(T, 0);
  if (lim < 1) return from_dense(dense, T);

  // Points whose first n coordinates vanish: only (0,...,0,1), height 1.
  dense[1] += 1;

  // Remaining points: the first nonzero coordinate sits at index `lead` < n and is
  // positive; the prefix x_0..x_{n-1} is enumerated, the last coordinate is swept.
  const int prefix_len = n;
  const int threads = resolve_threads(opts.threads);
  std::vector<std::vector<std::uint64_t>> local(threads, std::vector<std::uint64_t>(T, 0));

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t first = 1; first <= lim; ++first) {
    auto& acc = local[omp_get_thread_num()];
    for (int lead = 0; lead < prefix_len; ++lead) {
      // Prefix: zeros before `lead`, `first` at lead, free coordinates after.
      const int free = prefix_len - lead - 1;
      std::vector<std::int64_t> tail(free, -lim);
      for (;;) {
        std::uint64_t g = static_cast<std::uint64_t>(first);
        std::int64_t m = first;
        for (auto x : tail) {
          g = std::gcd(g, static_cast<std::uint64_t>(std::abs(x)));
          m = std::max<std::int64_t>(m, std::abs(x));
        }
        auto table = coprime_table(static_cast<std::uint32_t>(g));
        // x = 0: contributes iff g == 1.
        if (g == 1) acc[m] += 1;
        std::uint64_t r = 1 % g;
        for (std::int64_t x = 1; x <= lim; ++x) {
          if (table[r]) acc[std::max<std::int64_t>(m, x)] += 2;
          if (++r == g) r = 0;
        }
        int k = free - 1;
        while (k >= 0 && tail[k] == lim) tail[k--] = -lim;
        if (k < 0) break;
        ++tail[k];
      }
    }
  }
  for (const auto& acc : local)
    for (std::size_t h = 0; h < T; ++h) dense[h] = checked_add(dense[h], acc[h]);
  return from_dense(dense, T);
}

Pgl2Count count_pgl2_adjoint(std::uint64_t T, const std::vector<std::uint64_t>& primes_tracked,
                             const EnumerationOptions& opts) {
  if (T < 1) throw DomainError("threshold must be >= 1");
  if (T > static_cast<std::uint64_t>(INT32_MAX)) throw ResourceGuardError("threshold must fit in int32");
  for (auto p : primes_tracked)
    if (!heights::is_prime(p)) throw DomainError("tracked modulus " + std::to_string(p) + " is not prime");

  const std::int64_t default_radius = static_cast<std::int64_t>(iroot(T, 2));
  const std::int64_t B = opts.radius ? *opts.radius : default_radius;
  if (B < 0) throw DomainError("negative enumeration radius");
  if (B > simd::kMaxEntryBound) throw ResourceGuardError("entry radius beyond the int32 kernel range");
  if (work_estimate(2 * B + 1, 4) > opts.max_work)
    throw ResourceGuardError("count_pgl2_adjoint: (2B+1)^4 = " + std::to_string(work_estimate(2 * B + 1, 4)) +
                             " exceeds the work guard " + std::to_string(opts.max_work));

  const auto& kern = simd::active_kernels();
  const auto T32 = static_cast<std::int32_t>(T);
  const std::size_t row_len = static_cast<std::size_t>(2 * B + 1);
  const std::size_t np = primes_tracked.size();

  // |det| <= 2 B^2, so the exponent never exceeds log_p(2 B^2).
  std::vector<std::size_t> max_k(np);
  for (std::size_t i = 0; i < np; ++i) {
    std::size_t k = 0;
    for (std::uint64_t v = 2 * static_cast<std::uint64_t>(std::max<std::int64_t>(B, 1) * B); v >= primes_tracked[i];
         v /= primes_tracked[i])
      ++k;
    max_k[i] = k + 1;
  }

  std::vector<std::vector<std::uint8_t>> coprime(static_cast<std::size_t>(B) + 1);
  for (std::int64_t g = 1; g <= B; ++g) coprime[g] = coprime_table(static_cast<std::uint32_t>(g));

  struct Acc {
    std::vector<std::uint64_t> spectrum;
    std::vector<std::vector<std::uint64_t>> hist;
  };
  const int threads = resolve_threads(opts.threads);
  std::vector<Acc> local(threads);
  for (auto& acc : local) {
    acc.spectrum.assign(T, 0);
    for (std::size_t i = 0; i < np; ++i) acc.hist.emplace_back(max_k[i], 0);
  }

#pragma omp parallel num_threads(threads)
  {
    Acc& acc = local[omp_get_thread_num()];
    std::vector<std::int32_t> row(row_len);
    std::vector<std::uint16_t> idx(row_len);

    // Outer loop slices on a; canonical sign means a > 0, or a == 0 and b > 0.
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t a = 0; a <= B; ++a) {
      for (std::int64_t b = (a == 0 ? 1 : -B); b <= B; ++b) {
        const std::int64_t k_ab = std::max({a * a, b * b, 2 * std::abs(a * b)});
        if (k_ab >= static_cast<std::int64_t>(T)) continue;
        const std::int64_t g_ab = std::gcd(a, b);
        for (std::int64_t c = -B; c <= B; ++c) {
          if (std::max({k_ab, c * c, std::abs(a * c)}) >= static_cast<std::int64_t>(T)) continue;
          const auto g = static_cast<std::uint64_t>(std::gcd(g_ab, c));
          kern.adjoint_heights(static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                               static_cast<std::int32_t>(c), static_cast<std::int32_t>(-B), row);
          const std::size_t hits = kern.select_below(row, T32, idx.data());
          const std::uint8_t* table = coprime[g].data();
          const std::int64_t bc = b * c;
          for (std::size_t j = 0; j < hits; ++j) {
            const std::int64_t d = idx[j] - B;
            const std::int64_t det = a * d - bc;
            if (det == 0) continue;
            if (g != 1 && !table[static_cast<std::uint64_t>(d + g * (B + 1)) % g]) continue;
            acc.spectrum[row[idx[j]]] += 1;
            auto adet = static_cast<std::uint64_t>(std::abs(det));
            for (std::size_t i = 0; i < np; ++i) {
              const std::uint64_t p = primes_tracked[i];
              std::size_t k = 0;
              if (p == 2) {
                k = static_cast<std::size_t>(std::countr_zero(adet));
              } else {
                std::uint64_t v = adet;
                while (v % p == 0) {
                  v /= p;
                  ++k;
                }
              }
              acc.hist[i][k] += 1;
            }
          }
        }
      }
    }
  }

  std::vector<std::uint64_t> dense(T, 0);
  Pgl2Count out;
  out.histograms.resize(np);
  for (std::size_t i = 0; i < np; ++i) out.histograms[i].p = primes_tracked[i];
  for (const auto& acc : local) {
    for (std::size_t h = 0; h < T; ++h) dense[h] = checked_add(dense[h], acc.spectrum[h]);
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t k = 0; k < acc.hist[i].size(); ++k)
        if (acc.hist[i][k]) {
          auto& slot = out.histograms[i].freq[static_cast<std::int64_t>(k)];
          slot = checked_add(slot, acc.hist[i][k]);
        }
  }
  out.spectrum = from_dense(dense, T);
  for (const auto& h : out.histograms)
    if (h.total() != out.spectrum.total) throw InvariantViolation("Cartan histogram total differs from point count");
  return out;
}

std::uint64_t convolve_counts(const HeightSpectrum& s1, const HeightSpectrum& s2, int w1, int w2, std::uint64_t T) {
  if (w1 < 1 || w2 < 1) throw DomainError("weights must be >= 1");
  if (T <= 1) return 0;
  // Every height is >= 1, so each factor alone may reach (T-1)^(1/w).
  const std::uint64_t need1 = iroot(T - 1, w1) + 1;
  const std::uint64_t need2 = iroot(T - 1, w2) + 1;
  if (s1.bound < need1)
    throw DomainError("first spectrum complete below " + std::to_string(s1.bound) + ", need " + std::to_string(need1));
  if (s2.bound < need2)
    throw DomainError("second spectrum complete below " + std::to_string(s2.bound) + ", need " +
                      std::to_string(need2));

  // Cumulative counts of s1 by height.
  std::vector<std::uint64_t> heights1;
  std::vector<std::uint64_t> cum1;
  std::uint64_t run = 0;
  for (const auto& [h, c] : s1.counts) {
    if (h >= need1) break;
    run = checked_add(run, c);
    heights1.push_back(h);
    cum1.push_back(run);
  }
  auto count1_upto = [&](std::uint64_t hmax) -> std::uint64_t {
    auto it = std::upper_bound(heights1.begin(), heights1.end(), hmax);
    if (it == heights1.begin()) return 0;
    return cum1[static_cast<std::size_t>(it - heights1.begin()) - 1];
  };

  std::uint64_t total = 0;
  for (const auto& [h2, c2] : s2.counts) {
    const std::uint64_t p2 = pow_capped(h2, w2, T);
    if (p2 >= T) break;
    // H1^w1 * p2 < T  <=>  H1^w1 <= (T-1) / p2.
    const std::uint64_t hmax = iroot((T - 1) / p2, w1);
    total = checked_add(total, checked_mul(c2, count1_upto(hmax)));
  }
  return total;
}

std::map<std::int64_t, double> cartan_statistics(const CartanHistogram& hist) {
  const std::uint64_t n = hist.total();
  if (n == 0) throw DomainError("empty Cartan histogram");
  std::map<std::int64_t, double> out;
  for (const auto& [k, c] : hist.freq) out[k] = static_cast<double>(c) / static_cast<double>(n);
  return out;
}

FiberSum pgl2_fiber_sum(const HeightSpectrum& fiber, double exponent, std::uint64_t height_cutoff) {
  if (exponent <= 2) throw DomainError("fiber sum diverges for exponent <= 2 (PGL_2 count grows like T^2)");
  if (height_cutoff < 2 || fiber.bound < height_cutoff)
    throw DomainError("fiber spectrum incomplete below the cutoff");
  FiberSum out;
  for (const auto& [h, c] : fiber.counts) {
    if (h >= height_cutoff) break;
    out.truncated += static_cast<double>(c) * std::pow(static_cast<double>(h), -exponent);
  }
  // N(x) <= (2 sqrt(x) + 1)^4 / 2 <= K x^2 for x >= X; integrate x^-e against dN.
  const double X = static_cast<double>(height_cutoff);
  const double K = 8.0 * std::pow(1.0 + 1.0 / (2.0 * std::sqrt(X)), 4);
  out.tail_bound = exponent * K * std::pow(X, 2.0 - exponent) / (exponent - 2.0);
  return out;
}

std::string spectrum_digest(const HeightSpectrum& s) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&](const std::string& str) {
    for (unsigned char ch : str) {
      h ^= ch;
      h *= 1099511628211ull;
    }
  };
  feed("bound=" + std::to_string(s.bound) + "\n");
  for (const auto& [k, c] : s.counts) feed(std::to_string(k) + ":" + std::to_string(c) + "\n");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace manin::enumeration
