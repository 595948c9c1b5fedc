#include <doctest.h>

#include <bit>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "twolevel/kernels.hpp"
#include "twolevel/rule.hpp"

using namespace twolevel;

namespace {

std::vector<std::uint64_t> random_bits(std::mt19937_64& rng, std::size_t d) {
  std::vector<std::uint64_t> bits(BinaryDataset::words_for(d), 0);
  for (std::size_t j = 0; j < d; ++j) {
    if (rng() & 1U) bits[j / 64] |= std::uint64_t{1} << (j % 64);
  }
  return bits;
}

struct ActiveIsa {
  kernels::Isa saved = kernels::active().isa;
  ~ActiveIsa() { kernels::set_active(saved); }
};

}  // namespace

TEST_CASE("scalar kernels follow their definitions") {
  std::mt19937_64 rng(1);
  const auto& k = kernels::table(kernels::Isa::scalar);
  for (std::size_t d : {0, 1, 7, 63, 64, 65, 130, 257}) {
    const auto a = random_bits(rng, d);
    const auto b = random_bits(rng, d);
    std::vector<double> w(d);
    for (auto& v : w) v = std::uniform_real_distribution<double>(-1.0, 2.0)(rng);
    std::uint32_t pop = 0;
    double sum = 0.0;
    double mx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool abit = (a[j / 64] >> (j % 64)) & 1U;
      const bool bbit = (b[j / 64] >> (j % 64)) & 1U;
      pop += abit && bbit;
      if (abit) {
        sum += w[j];
        mx = std::max(mx, w[j]);
      }
    }
    CHECK(k.and_popcount(a.data(), b.data(), a.size()) == pop);
    CHECK(k.masked_sum(a.data(), w.data(), d) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(k.masked_max(a.data(), w.data(), d) == mx);
  }
}

TEST_CASE("every available ISA matches the scalar reference") {
  std::mt19937_64 rng(2);
  const auto& ref = kernels::table(kernels::Isa::scalar);
  const auto isas = kernels::available_isas();
  REQUIRE(isas.front() == kernels::Isa::scalar);
  for (kernels::Isa isa : isas) {
    CAPTURE(std::string(kernels::isa_name(isa)));
    const auto& k = kernels::table(isa);
    CHECK(k.isa == isa);
    for (int trial = 0; trial < 400; ++trial) {
      const std::size_t d = rng() % 600;
      const auto a = random_bits(rng, d);
      const auto b = random_bits(rng, d);
      std::vector<double> w(d);
      for (auto& v : w) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      CHECK(k.and_popcount(a.data(), b.data(), a.size()) ==
            ref.and_popcount(a.data(), b.data(), a.size()));
      CHECK(k.masked_sum(a.data(), w.data(), d) ==
            doctest::Approx(ref.masked_sum(a.data(), w.data(), d)).epsilon(1e-12));
      CHECK(k.masked_max(a.data(), w.data(), d) == ref.masked_max(a.data(), w.data(), d));
    }
  }
}

TEST_CASE("batched helpers agree across ISAs") {
  std::mt19937_64 rng(3);
  const std::size_t n = 37;
  const std::size_t d = 150;
  const std::size_t words = BinaryDataset::words_for(d);
  std::vector<std::uint64_t> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = random_bits(rng, d);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  const auto clause = random_bits(rng, d);
  std::vector<double> w(d);
  for (auto& v : w) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  std::vector<std::uint32_t> ref_counts(n);
  std::vector<double> ref_sums(n);
  kernels::row_counts(kernels::table(kernels::Isa::scalar), rows.data(), n, words, clause.data(),
                      ref_counts.data());
  kernels::row_sums(kernels::table(kernels::Isa::scalar), rows.data(), n, words, d, w.data(),
                    ref_sums.data());
  for (kernels::Isa isa : kernels::available_isas()) {
    std::vector<std::uint32_t> counts(n);
    std::vector<double> sums(n);
    kernels::row_counts(kernels::table(isa), rows.data(), n, words, clause.data(), counts.data());
    kernels::row_sums(kernels::table(isa), rows.data(), n, words, d, w.data(), sums.data());
    CHECK(counts == ref_counts);
    for (std::size_t i = 0; i < n; ++i) CHECK(sums[i] == doctest::Approx(ref_sums[i]).epsilon(1e-12));
  }
}

TEST_CASE("predictions and costs do not depend on the active ISA") {
  ActiveIsa restore;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ds = oracle::random_dataset(rng, 40, 1 + rng() % 140);
    const auto rule = oracle::random_rule(rng, ds.cols(), 1 + rng() % 4);
    const auto costs = default_column_costs(ds);
    kernels::set_active(kernels::Isa::scalar);
    const auto ref_pred = predict_all(ds, rule);
    const double ref_cost = hamming_cost(ds, rule, 0.1, costs).total;
    for (kernels::Isa isa : kernels::available_isas()) {
      kernels::set_active(isa);
      CHECK(predict_all(ds, rule) == ref_pred);
      CHECK(hamming_cost(ds, rule, 0.1, costs).total == doctest::Approx(ref_cost));
    }
  }
}

TEST_CASE("unavailable ISAs are rejected") {
  for (kernels::Isa isa : {kernels::Isa::avx2, kernels::Isa::neon}) {
    const auto avail = kernels::available_isas();
    if (std::find(avail.begin(), avail.end(), isa) == avail.end()) {
      CHECK_THROWS_AS(kernels::table(isa), std::invalid_argument);
    }
  }
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
}
