// AVX2 variants. This translation unit is compiled with -mavx2 -mpopcnt and
// must only be entered after a runtime CPU check.

#include "twolevel/kernels.hpp"

#if defined(TWOLEVEL_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <bit>

namespace twolevel::kernels {
namespace {

inline __m256i popcount_bytes(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                          0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  return _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
}

std::uint32_t and_popcount_avx2(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t words) {
  std::size_t k = 0;
  __m256i acc = _mm256_setzero_si256();
  for (; k + 4 <= words; k += 4) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + k));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + k));
    const __m256i bytes = popcount_bytes(_mm256_and_si256(va, vb));
    acc = _mm256_add_epi64(acc, _mm256_sad_epu8(bytes, _mm256_setzero_si256()));
  }
  std::uint64_t count = static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 0)) +
                        static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 1)) +
                        static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 2)) +
                        static_cast<std::uint64_t>(_mm256_extract_epi64(acc, 3));
  for (; k < words; ++k) count += static_cast<std::uint64_t>(_mm_popcnt_u64(a[k] & b[k]));
  return static_cast<std::uint32_t>(count);
}

// Expands 4 bits of `nibble` into a 4 x 64-bit lane mask.
inline __m256d nibble_mask(std::uint64_t nibble) {
  const __m256i selector = _mm256_setr_epi64x(1, 2, 4, 8);
  const __m256i spread = _mm256_set1_epi64x(static_cast<long long>(nibble));
  return _mm256_castsi256_pd(
      _mm256_cmpeq_epi64(_mm256_and_si256(spread, selector), selector));
}

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

inline double horizontal_max(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double masked_sum_avx2(const std::uint64_t* bits, const double* w, std::size_t d) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = d & ~std::size_t{3};
  for (std::size_t base = 0; base < full; base += 64) {
    const std::uint64_t word = bits[base / 64];
    if (word == 0) continue;
    const std::size_t stop = std::min(full, base + 64);
    for (std::size_t j = base; j < stop; j += 4) {
      const std::uint64_t nibble = (word >> (j - base)) & 0xf;
      if (nibble == 0) continue;
      acc = _mm256_add_pd(acc, _mm256_and_pd(nibble_mask(nibble), _mm256_loadu_pd(w + j)));
    }
  }
  double sum = horizontal_sum(acc);
  for (std::size_t j = full; j < d; ++j) {
    if ((bits[j / 64] >> (j % 64)) & 1U) sum += w[j];
  }
  return sum;
}

double masked_max_avx2(const std::uint64_t* bits, const double* w, std::size_t d) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = d & ~std::size_t{3};
  for (std::size_t base = 0; base < full; base += 64) {
    const std::uint64_t word = bits[base / 64];
    if (word == 0) continue;
    const std::size_t stop = std::min(full, base + 64);
    for (std::size_t j = base; j < stop; j += 4) {
      const std::uint64_t nibble = (word >> (j - base)) & 0xf;
      if (nibble == 0) continue;
      acc = _mm256_max_pd(acc, _mm256_and_pd(nibble_mask(nibble), _mm256_loadu_pd(w + j)));
    }
  }
  double best = horizontal_max(acc);
  for (std::size_t j = full; j < d; ++j) {
    if ((bits[j / 64] >> (j % 64)) & 1U) best = std::max(best, w[j]);
  }
  return best;
}

const KernelTable kAvx2{Isa::avx2, &and_popcount_avx2, &masked_sum_avx2, &masked_max_avx2};

}  // namespace

const KernelTable* detail::avx2_table() { return &kAvx2; }

bool detail::cpu_has_avx2() { return __builtin_cpu_supports("avx2") != 0; }

}  // namespace twolevel::kernels

#else

namespace twolevel::kernels {
const KernelTable* detail::avx2_table() { return nullptr; }
bool detail::cpu_has_avx2() { return false; }
}  // namespace twolevel::kernels

#endif
