#include "twolevel/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace twolevel::kernels {
namespace {

const KernelTable* usable(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return detail::scalar_table();
    case Isa::avx2:
      return detail::cpu_has_avx2() ? detail::avx2_table() : nullptr;
    case Isa::neon:
      return detail::neon_table();
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("TWOLEVEL_ISA"); env != nullptr && *env != '\0') {
    const std::string wanted(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (wanted == isa_name(isa)) {
        if (const KernelTable* t = usable(isa)) return t;
        throw std::runtime_error("TWOLEVEL_ISA=" + wanted + " is not available on this machine");
      }
    }
    throw std::runtime_error("unknown TWOLEVEL_ISA value: " + wanted);
  }
  if (const KernelTable* t = usable(Isa::avx2)) return t;
  if (const KernelTable* t = usable(Isa::neon)) return t;
  return detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> selected{pick_default()};
  return selected;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

const KernelTable& table(Isa isa) {
  const KernelTable* t = usable(isa);
  if (t == nullptr) {
    throw std::invalid_argument("kernel ISA not available: " + std::string(isa_name(isa)));
  }
  return *t;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (usable(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

void set_active(Isa isa) { current().store(&table(isa), std::memory_order_relaxed); }

void row_counts(const KernelTable& k, const std::uint64_t* rows, std::size_t n,
                std::size_t words, const std::uint64_t* clause, std::uint32_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = k.and_popcount(rows + i * words, clause, words);
}

void row_sums(const KernelTable& k, const std::uint64_t* rows, std::size_t n,
              std::size_t words, std::size_t d, const double* w, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = k.masked_sum(rows + i * words, w, d);
}

}  // namespace twolevel::kernels
