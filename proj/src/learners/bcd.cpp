#include <random>

#include "twolevel/learners.hpp"

namespace twolevel {

namespace {
constexpr double kImprovementTol = 1e-9;
}

std::vector<std::size_t> bcd_filter_samples(const BinaryDataset& ds, const TwoLevelRule& rule,
                                            std::size_t r0) {
  if (r0 >= rule.size()) throw std::out_of_range("clause index out of range");
  if (rule.d != ds.cols()) throw ShapeError("rule arity does not match dataset");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    bool keep = ds.label(i) == 1;
    if (!keep) {
      keep = true;
      for (std::size_t r = 0; r < rule.size() && keep; ++r) {
        if (r != r0) keep = eval_clause(ds, rule.clauses[r], i);
      }
    }
    if (keep) rows.push_back(i);
  }
  return rows;
}

IterativeResult learn_bcd(const BinaryDataset& ds, const LearnConfig& cfg) {
  cfg.validate();
  const auto costs = cfg.costs_for(ds);
  IterativeResult out;
  TwoLevelRule current = learn_set_cover(ds, cfg);
  double current_cost = hamming_cost(ds, current, cfg.theta, costs).total;
  out.trace.records.push_back({0, current_cost, "init", std::nullopt, true});
  std::mt19937_64 rng(cfg.seed);

  auto relearn = [&](std::size_t r) {
    TwoLevelRule candidate = current;
    const auto rows = bcd_filter_samples(ds, current, r);
    // No row depends on clause r, so only its sparsity cost counts.
    candidate.clauses[r] = rows.empty() ? Clause(ds.cols())
                                        : learn_one_level(ds, rows, cfg.theta, costs, cfg).clause;
    return candidate;
  };

  // Single-clause orders only stop after a full round without progress.
  std::size_t stale = 0;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    out.iterations = it;
    std::vector<std::size_t> blocks;
    switch (cfg.update_order) {
      case UpdateOrder::greedy:
        for (std::size_t r = 0; r < cfg.R; ++r) blocks.push_back(r);
        break;
      case UpdateOrder::cyclic:
        blocks.push_back((it - 1) % cfg.R);
        break;
      case UpdateOrder::random:
        blocks.push_back(static_cast<std::size_t>(rng() % cfg.R));
        break;
    }

    std::optional<TwoLevelRule> best;
    double best_cost = 0.0;
    std::size_t best_r = 0;
    for (std::size_t r : blocks) {
      TwoLevelRule candidate = relearn(r);
      const double cost = hamming_cost(ds, candidate, cfg.theta, costs).total;
      if (!best || cost < best_cost) {
        best = std::move(candidate);
        best_cost = cost;
        best_r = r;
      }
    }

    const bool accept = best_cost <= current_cost;
    const bool improved = best_cost < current_cost - kImprovementTol;
    out.trace.records.push_back({it, best_cost, "update", best_r, accept});
    if (accept) {
      current = std::move(*best);
      current_cost = best_cost;
    }
    if (improved) {
      stale = 0;
      continue;
    }
    const std::size_t patience = cfg.update_order == UpdateOrder::greedy ? 1 : cfg.R;
    if (++stale >= patience) break;
  }

  out.rule = std::move(current);
  out.cost = hamming_cost(ds, out.rule, cfg.theta, costs);
  return out;
}

}  // namespace twolevel
