#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "twolevel/binarization.hpp"
#include "twolevel/kernels.hpp"
#include "twolevel/lp.hpp"

namespace twolevel {
namespace {

constexpr double kCostTieTol = 1e-9;

struct GroupKey {
  bool disable;
  std::size_t origin;
  std::optional<std::string> level;

  bool operator<(const GroupKey& o) const {
    // The disable column sorts first, as it does in the dataset.
    if (disable != o.disable) return disable;
    return std::tie(origin, level) < std::tie(o.origin, o.level);
  }
};

void verify_group(const BinaryDataset& ds, const RedundancyGroup& g) {
  const std::size_t n = ds.rows();
  auto fail = [&](const std::string& what) {
    throw DataError("column metadata of '" + g.name + "' disagrees with data: " + what);
  };
  for (std::size_t k = 0; k < g.entries.size(); ++k) {
    const auto& e = g.entries[k];
    if (e.leq && e.gt) {
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.at(i, *e.leq) == ds.at(i, *e.gt)) {
          fail("columns " + std::to_string(*e.leq) + " and " + std::to_string(*e.gt) +
               " are not complements at row " + std::to_string(i));
        }
      }
    }
    if (k + 1 == g.entries.size()) continue;
    const auto& next = g.entries[k + 1];
    for (std::size_t i = 0; i < n; ++i) {
      if (e.leq && next.leq && ds.at(i, *e.leq) && !ds.at(i, *next.leq)) {
        fail("LEQ column " + std::to_string(*e.leq) + " does not imply column " +
             std::to_string(*next.leq) + " at row " + std::to_string(i));
      }
      if (e.gt && next.gt && ds.at(i, *next.gt) && !ds.at(i, *e.gt)) {
        fail("GT column " + std::to_string(*next.gt) + " does not imply column " +
             std::to_string(*e.gt) + " at row " + std::to_string(i));
      }
    }
  }
}

bool lexicographically_before(const CombinationCandidate& a, const CombinationCandidate& b) {
  if (a.columns.size() != b.columns.size()) return a.columns.size() < b.columns.size();
  return a.columns < b.columns;
}

// Aggregates of every clause other than the one being rounded, per sample.
struct OtherClauses {
  std::vector<double> pos;  // zero_one: max_r (1 - s); hamming: sum_r max(0, 1 - s)
  std::vector<double> neg;  // zero_one: sum_r max_j a w; hamming: min_r s
};

OtherClauses other_clause_terms(const BinaryDataset& ds, const WeightMatrix& w, std::size_t skip,
                                BinarizeObjective objective) {
  const auto& k = kernels::active();
  const std::size_t n = ds.rows();
  const bool zero_one = objective == BinarizeObjective::zero_one;
  OtherClauses out;
  out.pos.assign(n, zero_one ? -std::numeric_limits<double>::infinity() : 0.0);
  out.neg.assign(n, zero_one ? 0.0 : std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < w.clauses(); ++r) {
    if (r == skip) continue;
    const double* wr = w.clause(r).data();
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.label(i)) {
        const double s = k.masked_sum(ds.row(i), wr, ds.cols());
        out.pos[i] = zero_one ? std::max(out.pos[i], 1.0 - s) : out.pos[i] + std::max(0.0, 1.0 - s);
      } else if (zero_one) {
        out.neg[i] += k.masked_max(ds.row(i), wr, ds.cols());
      } else {
        out.neg[i] = std::min(out.neg[i], k.masked_sum(ds.row(i), wr, ds.cols()));
      }
    }
  }
  return out;
}

}  // namespace

TwoLevelRule simple_binarize(const WeightMatrix& frac, double threshold, Form form,
                             bool has_disable) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarization threshold must lie in (0, 1)");
  }
  TwoLevelRule rule(form, frac.arity(), frac.clauses(), has_disable);
  for (std::size_t r = 0; r < frac.clauses(); ++r) {
    for (std::size_t j = 0; j < frac.arity(); ++j) {
      if (frac.at(j, r) >= threshold) rule.clauses[r].set(j);
    }
  }
  return rule;
}

std::vector<std::size_t> RedundancyGroup::columns() const {
  std::vector<std::size_t> out;
  for (const auto& e : entries) {
    if (e.leq) out.push_back(*e.leq);
  }
  for (const auto& e : entries) {
    if (e.gt) out.push_back(*e.gt);
  }
  return out;
}

RedundancyIndex build_redundancy_index(std::span<const FeatureMeta> meta) {
  std::map<GroupKey, RedundancyGroup> by_key;
  for (std::size_t j = 0; j < meta.size(); ++j) {
    const FeatureMeta& m = meta[j];
    GroupKey key{m.is_disable, m.is_disable ? 0 : m.origin, m.is_disable ? std::nullopt : m.level};
    auto& g = by_key[key];
    g.origin = m.origin;
    g.level = key.level;
    g.is_disable = m.is_disable;
    g.name = m.is_disable ? m.display_name() : m.origin_name + (m.level ? " = " + *m.level : "");
    auto it = std::find_if(g.entries.begin(), g.entries.end(),
                           [&](const auto& e) { return e.threshold == m.threshold; });
    if (it == g.entries.end()) {
      g.entries.push_back({m.threshold, std::nullopt, std::nullopt});
      it = g.entries.end() - 1;
    }
    auto& slot = m.direction == Direction::leq && !m.is_disable ? it->leq : it->gt;
    if (slot) {
      throw DataError("columns " + std::to_string(*slot) + " and " + std::to_string(j) +
                      " have identical metadata");
    }
    slot = j;
  }
  RedundancyIndex idx;
  idx.group_of.assign(meta.size(), 0);
  for (auto& [key, g] : by_key) {
    std::sort(g.entries.begin(), g.entries.end(),
              [](const auto& a, const auto& b) { return a.threshold < b.threshold; });
    for (std::size_t j : g.columns()) idx.group_of[j] = idx.groups.size();
    idx.groups.push_back(std::move(g));
  }
  return idx;
}

RedundancyIndex build_redundancy_index(const BinaryDataset& ds, IndexMode mode) {
  RedundancyIndex idx = build_redundancy_index(ds.columns());
  if (mode == IndexMode::verify_data) {
    for (const auto& g : idx.groups) verify_group(ds, g);
  }
  return idx;
}

std::vector<CombinationCandidate> enumerate_candidates(const RedundancyIndex& idx,
                                                       std::size_t group, Regime regime) {
  const RedundancyGroup& g = idx.groups.at(group);
  std::vector<CombinationCandidate> out;
  out.push_back({});
  for (std::size_t j : g.columns()) out.push_back({{j}});
  for (std::size_t a = 0; a < g.entries.size(); ++a) {
    if (!g.entries[a].leq) continue;
    for (std::size_t b = 0; b < g.entries.size(); ++b) {
      if (!g.entries[b].gt) continue;
      if (regime == Regime::disable && a >= b) continue;
      CombinationCandidate c{{*g.entries[a].leq, *g.entries[b].gt}};
      std::sort(c.columns.begin(), c.columns.end());
      out.push_back(std::move(c));
    }
  }
  return out;
}

bool is_integral(const WeightMatrix& w) {
  const auto flags = lp::is_integral(w.values());
  return std::all_of(flags.begin(), flags.end(), [](bool f) { return f; });
}

std::optional<std::string> redundancy_violation(const RedundancyIndex& idx, const Clause& clause,
                                                Regime regime) {
  for (const auto& g : idx.groups) {
    std::optional<std::size_t> leq_at;
    std::optional<std::size_t> gt_at;
    for (std::size_t k = 0; k < g.entries.size(); ++k) {
      const auto& e = g.entries[k];
      if (e.leq && clause.selected(*e.leq)) {
        if (leq_at) return "two LEQ columns of '" + g.name + "'";
        leq_at = k;
      }
      if (e.gt && clause.selected(*e.gt)) {
        if (gt_at) return "two GT columns of '" + g.name + "'";
        gt_at = k;
      }
    }
    if (regime == Regime::disable && leq_at && gt_at && *leq_at >= *gt_at) {
      return *leq_at == *gt_at ? "complementary pair of '" + g.name + "'"
                               : "zigzag pair of '" + g.name + "'";
    }
  }
  return std::nullopt;
}

TwoLevelRule redundancy_binarize(const WeightMatrix& frac, const BinaryDataset& ds, double theta,
                                 std::span<const double> column_costs,
                                 const RedundancyOptions& options, const RedundancyIndex* index,
                                 std::vector<BinarizeStep>* trace) {
  const std::size_t d = frac.arity();
  const std::size_t R = frac.clauses();
  if (d != ds.cols()) throw ShapeError("weight arity does not match dataset");
  if (column_costs.size() != d) throw ShapeError("column cost count does not match dataset");
  const bool has_disable = ds.has_disable_column();
  TwoLevelRule rule(Form::cnf, d, R, has_disable);

  if (is_integral(frac)) {
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        if (frac.at(j, r) > 0.5) rule.clauses[r].set(j);
      }
    }
    return rule;
  }

  RedundancyIndex own;
  if (index == nullptr) {
    own = build_redundancy_index(ds.columns());
    index = &own;
  }
  const Regime regime = options.regime.value_or(has_disable ? Regime::disable : Regime::no_disable);
  const bool zero_one = options.objective == BinarizeObjective::zero_one;
  const auto& kern = kernels::active();
  const std::size_t n = ds.rows();
  const std::size_t G = index->groups.size();

  WeightMatrix start = frac;
  if (options.placeholder == Placeholder::threshold_half) {
    for (std::size_t r = 0; r < R; ++r) {
      for (double& v : start.clause(r)) v = v >= 0.5 ? 1.0 : 0.0;
    }
  }

  std::vector<std::vector<CombinationCandidate>> candidates(G);
  for (std::size_t g = 0; g < G; ++g) candidates[g] = enumerate_candidates(*index, g, regime);

  std::vector<double> summed_mass(G, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < d; ++j) summed_mass[index->group_of[j]] += frac.at(j, r);
  }

  std::vector<double> s_base(n), m_base(n), masked(d);
  std::vector<std::uint32_t> counts(n);
  for (std::size_t r = 0; r < R; ++r) {
    WeightMatrix point = start;
    const OtherClauses others = other_clause_terms(ds, point, r, options.objective);
    double other_sparsity = 0.0;
    for (std::size_t q = 0; q < R; ++q) {
      if (q == r) continue;
      for (std::size_t j = 0; j < d; ++j) other_sparsity += theta * column_costs[j] * point.at(j, q);
    }

    std::vector<double> mass(G, 0.0);
    if (options.order == GroupOrder::summed) {
      mass = summed_mass;
    } else {
      for (std::size_t j = 0; j < d; ++j) mass[index->group_of[j]] += frac.at(j, r);
    }
    std::vector<std::size_t> order(G);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mass[a] > mass[b]; });

    for (std::size_t g : order) {
      const auto members = index->groups[g].columns();
      // Clause r with this group's columns removed.
      std::copy(point.clause(r).begin(), point.clause(r).end(), masked.begin());
      for (std::size_t j : members) masked[j] = 0.0;
      double rest_sparsity = other_sparsity;
      for (std::size_t j = 0; j < d; ++j) rest_sparsity += theta * column_costs[j] * masked[j];
      for (std::size_t i = 0; i < n; ++i) {
        s_base[i] = kern.masked_sum(ds.row(i), masked.data(), d);
        if (zero_one && !ds.label(i)) m_base[i] = kern.masked_max(ds.row(i), masked.data(), d);
      }

      std::vector<double> costs(candidates[g].size());
      for (std::size_t c = 0; c < candidates[g].size(); ++c) {
        const auto& cand = candidates[g][c];
        std::fill(counts.begin(), counts.end(), 0U);
        double cost = rest_sparsity;
        for (std::size_t j : cand.columns) {
          cost += theta * column_costs[j];
          for (std::size_t i = 0; i < n; ++i) counts[i] += ds.at(i, j) ? 1U : 0U;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double s = s_base[i] + counts[i];
          if (ds.label(i)) {
            cost += zero_one ? std::max({0.0, others.pos[i], 1.0 - s})
                             : others.pos[i] + std::max(0.0, 1.0 - s);
          } else if (zero_one) {
            const double m = counts[i] > 0 ? 1.0 : m_base[i];
            cost += std::max(0.0, others.neg[i] + m - static_cast<double>(R - 1));
          } else {
            cost += std::min(others.neg[i], s);
          }
        }
        costs[c] = cost;
      }
      const double min_cost = *std::min_element(costs.begin(), costs.end());
      const double tol = kCostTieTol * std::max(1.0, std::abs(min_cost));
      std::size_t pick = costs.size();
      for (std::size_t c = 0; c < costs.size(); ++c) {
        if (costs[c] > min_cost + tol) continue;
        if (pick == costs.size() || lexicographically_before(candidates[g][c], candidates[g][pick])) {
          pick = c;
        }
      }
      const CombinationCandidate* best = &candidates[g][pick];
      const double best_cost = costs[pick];

      if (trace != nullptr) trace->push_back({r, g, point, *best, best_cost});
      for (std::size_t j : members) point.at(j, r) = 0.0;
      for (std::size_t j : best->columns) point.at(j, r) = 1.0;
    }

    for (std::size_t j = 0; j < d; ++j) {
      if (point.at(j, r) > 0.5) rule.clauses[r].set(j);
    }
  }
  return rule;
}

}  // namespace twolevel
