#include <cmath>
#include <limits>

#include "twolevel/kernels.hpp"
#include "twolevel/learners.hpp"

namespace twolevel {

namespace {
constexpr double kImprovementTol = 1e-9;
}

IdealOutputs am_update_v(const BinaryDataset& ds, const TwoLevelRule& rule) {
  if (rule.form != Form::cnf) throw ShapeError("ideal outputs are defined for CNF rules");
  if (rule.d != ds.cols()) throw ShapeError("rule arity does not match dataset");
  const std::size_t n = ds.rows();
  const std::size_t d = ds.cols();
  const std::size_t R = rule.size();
  const auto& k = kernels::active();
  IdealOutputs v(n, R);

  // Minimal clause sets of the negative rows.
  std::vector<std::vector<std::size_t>> minimal(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.label(i)) {
      for (std::size_t r = 0; r < R; ++r) v.at(i, r) = Ideal::one;
      continue;
    }
    std::uint32_t least = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t r = 0; r < R; ++r) {
      const std::uint32_t s = k.and_popcount(ds.row(i), rule.clauses[r].data(), ds.words());
      if (s < least) {
        least = s;
        minimal[i].clear();
      }
      if (s == least) minimal[i].push_back(r);
    }
  }

  // Cluster centers over every negative row whose minimal set holds r.
  std::vector<std::vector<double>> center(R, std::vector<double>(d, 0.0));
  std::vector<std::size_t> members(R, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r : minimal[i]) {
      ++members[r];
      for (std::size_t j = 0; j < d; ++j) center[r][j] += ds.at(i, j) ? 1.0 : 0.0;
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    if (members[r] == 0) continue;
    for (double& c : center[r]) c /= static_cast<double>(members[r]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (ds.label(i)) continue;
    std::size_t pick = minimal[i].front();
    if (minimal[i].size() > 1) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r : minimal[i]) {
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist += std::abs((ds.at(i, j) ? 1.0 : 0.0) - center[r][j]);
        if (dist < best) {
          best = dist;
          pick = r;
        }
      }
    }
    v.at(i, pick) = Ideal::zero;
  }
  return v;
}

IterativeResult learn_am(const BinaryDataset& ds, const LearnConfig& cfg) {
  cfg.validate();
  const auto costs = cfg.costs_for(ds);
  IterativeResult out;
  TwoLevelRule best = learn_set_cover(ds, cfg);
  double best_cost = hamming_cost(ds, best, cfg.theta, costs).total;
  out.trace.records.push_back({0, best_cost, "init", std::nullopt, true});

  TwoLevelRule current = best;
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    out.iterations = it;
    const IdealOutputs v = am_update_v(ds, current);
    TwoLevelRule next = current;
    for (std::size_t r = 0; r < cfg.R; ++r) {
      // Rows with a 0 or 1 target for this clause. Targets agree with the
      // labels (1 only on positives, 0 only on negatives), so no relabeling
      // is needed.
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (v.at(i, r) != Ideal::dont_care) rows.push_back(i);
      }
      // A clause no row depends on only adds sparsity cost.
      next.clauses[r] = rows.empty() ? Clause(ds.cols())
                                     : learn_one_level(ds, rows, cfg.theta, costs, cfg).clause;
    }
    const double cost = hamming_cost(ds, next, cfg.theta, costs).total;
    const bool improved = cost < best_cost - kImprovementTol;
    out.trace.records.push_back({it, cost, "update", std::nullopt, improved});
    if (!improved) break;
    best = next;
    best_cost = cost;
    current = std::move(next);
  }

  out.rule = std::move(best);
  out.cost = hamming_cost(ds, out.rule, cfg.theta, costs);
  return out;
}

}  // namespace twolevel
