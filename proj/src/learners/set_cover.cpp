#include <algorithm>

#include "twolevel/learners.hpp"

namespace twolevel {

namespace {

void require_disable_match(const BinaryDataset& ds, const LearnConfig& cfg) {
  if (cfg.allow_disable && !ds.has_disable_column()) {
    throw std::invalid_argument("allow_disable needs a dataset with the disable column");
  }
}

}  // namespace

TwoLevelRule learn_set_cover(const BinaryDataset& ds, const LearnConfig& cfg) {
  cfg.validate();
  require_disable_match(ds, cfg);
  const auto costs = cfg.costs_for(ds);
  TwoLevelRule rule(Form::cnf, ds.cols(), cfg.R, ds.has_disable_column());

  std::vector<std::size_t> remaining(ds.rows());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  for (std::size_t r = 0; r < cfg.R; ++r) {
    const auto positives = static_cast<std::size_t>(std::count_if(
        remaining.begin(), remaining.end(), [&](std::size_t i) { return ds.label(i) == 1; }));
    const bool no_positives = positives == 0;
    const bool no_negatives = positives == remaining.size();
    // Once no positive row is left every positive is already predicted 0,
    // so an empty clause changes nothing. With only positives left an empty
    // clause would zero them, so keep learning unless a clause can be
    // disabled.
    if (no_positives || (no_negatives && cfg.allow_disable)) {
      if (cfg.allow_disable) {
        for (std::size_t q = r; q < cfg.R; ++q) rule.clauses[q].set(0);
      }
      break;
    }
    rule.clauses[r] = learn_one_level(ds, remaining, cfg.theta, costs, cfg).clause;
    std::erase_if(remaining, [&](std::size_t i) { return !eval_clause(ds, rule.clauses[r], i); });
  }
  return rule;
}

}  // namespace twolevel
