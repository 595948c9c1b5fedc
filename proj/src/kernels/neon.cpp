// NEON variants for AArch64, where Advanced SIMD is part of the base ISA.

#include "twolevel/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <bit>

namespace twolevel::kernels {
namespace {

std::uint32_t and_popcount_neon(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t words) {
  std::size_t k = 0;
  uint64x2_t acc = vdupq_n_u64(0);
  for (; k + 2 <= words; k += 2) {
    const uint8x16_t v = vreinterpretq_u8_u64(vandq_u64(vld1q_u64(a + k), vld1q_u64(b + k)));
    acc = vaddq_u64(acc, vpaddlq_u32(vpaddlq_u16(vpaddlq_u8(vcntq_u8(v)))));
  }
  std::uint64_t count = vgetq_lane_u64(acc, 0) + vgetq_lane_u64(acc, 1);
  for (; k < words; ++k) count += std::popcount(a[k] & b[k]);
  return static_cast<std::uint32_t>(count);
}

inline float64x2_t pair_mask(std::uint64_t two_bits) {
  const uint64x2_t selector = {1, 2};
  const uint64x2_t spread = vdupq_n_u64(two_bits);
  return vreinterpretq_f64_u64(vceqq_u64(vandq_u64(spread, selector), selector));
}

inline float64x2_t masked_pair(std::uint64_t two_bits, const double* w) {
  return vreinterpretq_f64_u64(
      vandq_u64(vreinterpretq_u64_f64(pair_mask(two_bits)), vreinterpretq_u64_f64(vld1q_f64(w))));
}

double masked_sum_neon(const std::uint64_t* bits, const double* w, std::size_t d) {
  float64x2_t acc = vdupq_n_f64(0.0);
  const std::size_t full = d & ~std::size_t{1};
  for (std::size_t base = 0; base < full; base += 64) {
    const std::uint64_t word = bits[base / 64];
    if (word == 0) continue;
    const std::size_t stop = std::min(full, base + 64);
    for (std::size_t j = base; j < stop; j += 2) {
      const std::uint64_t two = (word >> (j - base)) & 0x3;
      if (two != 0) acc = vaddq_f64(acc, masked_pair(two, w + j));
    }
  }
  double sum = vaddvq_f64(acc);
  if (full < d && ((bits[full / 64] >> (full % 64)) & 1U)) sum += w[full];
  return sum;
}

double masked_max_neon(const std::uint64_t* bits, const double* w, std::size_t d) {
  float64x2_t acc = vdupq_n_f64(0.0);
  const std::size_t full = d & ~std::size_t{1};
  for (std::size_t base = 0; base < full; base += 64) {
    const std::uint64_t word = bits[base / 64];
    if (word == 0) continue;
    const std::size_t stop = std::min(full, base + 64);
    for (std::size_t j = base; j < stop; j += 2) {
      const std::uint64_t two = (word >> (j - base)) & 0x3;
      if (two != 0) acc = vmaxq_f64(acc, masked_pair(two, w + j));
    }
  }
  double best = vmaxvq_f64(acc);
  if (full < d && ((bits[full / 64] >> (full % 64)) & 1U)) best = std::max(best, w[full]);
  return best;
}

const KernelTable kNeon{Isa::neon, &and_popcount_neon, &masked_sum_neon, &masked_max_neon};

}  // namespace

const KernelTable* detail::neon_table() { return &kNeon; }

}  // namespace twolevel::kernels

#else

namespace twolevel::kernels {
const KernelTable* detail::neon_table() { return nullptr; }
}  // namespace twolevel::kernels

#endif
