#include <random>

#include "twolevel/data.hpp"

namespace twolevel {

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(i);
  }
  return rows;
}

FoldPlan stratified_folds(std::span<const std::uint8_t> labels, std::size_t k,
                          std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] ? 1 : 0].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw std::invalid_argument("class " + std::to_string(c) + " has " +
                                  std::to_string(by_class[c].size()) + " samples, fewer than " +
                                  std::to_string(k) + " folds");
    }
  }

  // Fisher-Yates with an explicit draw so the split does not depend on the
  // standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  FoldPlan plan{k, std::vector<std::size_t>(labels.size(), 0)};
  std::size_t next_fold = 0;
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(members[i - 1], members[j]);
    }
    // Dealing round-robin, continuing where the previous class stopped,
    // keeps fold sizes within one of each other.
    for (std::size_t idx : members) {
      plan.assignment[idx] = next_fold;
      next_fold = (next_fold + 1) % k;
    }
  }
  return plan;
}

FoldPlan stratified_folds(const BinaryDataset& ds, std::size_t k, std::uint64_t seed) {
  return stratified_folds(ds.labels(), k, seed);
}

}  // namespace twolevel
