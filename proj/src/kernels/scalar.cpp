#include "twolevel/kernels.hpp"

#include <algorithm>
#include <bit>

namespace twolevel::kernels {
namespace {

std::uint32_t and_popcount_scalar(const std::uint64_t* a, const std::uint64_t* b,
                                  std::size_t words) {
  std::uint32_t count = 0;
  for (std::size_t k = 0; k < words; ++k) count += std::popcount(a[k] & b[k]);
  return count;
}

double masked_sum_scalar(const std::uint64_t* bits, const double* w, std::size_t d) {
  double sum = 0.0;
  const std::size_t words = (d + 63) / 64;
  for (std::size_t k = 0; k < words; ++k) {
    std::uint64_t word = bits[k];
    while (word != 0) {
      const std::size_t j = k * 64 + std::countr_zero(word);
      sum += w[j];
      word &= word - 1;
    }
  }
  return sum;
}

double masked_max_scalar(const std::uint64_t* bits, const double* w, std::size_t d) {
  double best = 0.0;
  const std::size_t words = (d + 63) / 64;
  for (std::size_t k = 0; k < words; ++k) {
    std::uint64_t word = bits[k];
    while (word != 0) {
      const std::size_t j = k * 64 + std::countr_zero(word);
      best = std::max(best, w[j]);
      word &= word - 1;
    }
  }
  return best;
}

const KernelTable kScalar{Isa::scalar, &and_popcount_scalar, &masked_sum_scalar,
                          &masked_max_scalar};

}  // namespace

const KernelTable* detail::scalar_table() { return &kScalar; }

}  // namespace twolevel::kernels
