#pragma once

// Inner loops over bit-packed feature rows.
//
// Every kernel has a portable scalar reference implementation and, where the
// target supports it, a vectorized variant (AVX2 on x86-64, NEON on AArch64).
// The variant is chosen once at runtime from the CPU feature flags and can be
// pinned with the TWOLEVEL_ISA environment variable ("scalar", "avx2", "neon").
//
// Bit layout: feature j of a row lives in word j / 64, bit j % 64. Bits past
// the row arity must be zero.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace twolevel::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;

  /// popcount(a & b) over `words` 64-bit words.
  std::uint32_t (*and_popcount)(const std::uint64_t* a, const std::uint64_t* b,
                                std::size_t words);

  /// sum_j bit_j * w[j] for j < d.
  double (*masked_sum)(const std::uint64_t* bits, const double* w, std::size_t d);

  /// max(0, max_j bit_j * w[j]) for j < d.
  double (*masked_max)(const std::uint64_t* bits, const double* w, std::size_t d);
};

/// Kernels for `isa`; throws std::invalid_argument if the ISA was not
/// compiled in or the CPU lacks it.
const KernelTable& table(Isa isa);

/// The table selected for this process.
const KernelTable& active();

/// ISAs usable on this machine, scalar first.
std::vector<Isa> available_isas();

/// Overrides the process-wide selection. Intended for tests and benchmarks.
void set_active(Isa isa);

// Batched helpers used by the cost functions. `rows` is n rows of
// `words` words each.

/// out[i] = popcount(row_i & clause)
void row_counts(const KernelTable& k, const std::uint64_t* rows, std::size_t n,
                std::size_t words, const std::uint64_t* clause, std::uint32_t* out);

/// out[i] = sum_j a_ij * w[j]
void row_sums(const KernelTable& k, const std::uint64_t* rows, std::size_t n,
              std::size_t words, std::size_t d, const double* w, double* out);

namespace detail {
const KernelTable* scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
bool cpu_has_avx2();
}  // namespace detail

}  // namespace twolevel::kernels
