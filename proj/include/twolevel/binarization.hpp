#pragma once

// Rounding of fractional LP weights to binary rules: plain thresholding and
// a per-origin sweep over non-redundant column combinations.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twolevel/data.hpp"
#include "twolevel/rule.hpp"

namespace twolevel {

/// w_jr := 1 iff frac_jr >= threshold. Throws std::invalid_argument unless
/// 0 < threshold < 1.
TwoLevelRule simple_binarize(const WeightMatrix& frac, double threshold, Form form = Form::cnf,
                             bool has_disable = false);

/// Columns derived from one source feature (one categorical level counts as
/// its own source). Entry k holds the pair of columns at the k-th threshold;
/// native binary and categorical sources have a single entry without a
/// threshold, with `leq` the negated and `gt` the positive literal.
struct RedundancyGroup {
  struct Entry {
    std::optional<double> threshold;
    std::optional<std::size_t> leq;
    std::optional<std::size_t> gt;
  };

  std::size_t origin = 0;
  std::optional<std::string> level;
  std::string name;
  bool is_disable = false;
  std::vector<Entry> entries;  // ascending threshold

  /// All member columns, LEQ entries first, each in threshold order.
  std::vector<std::size_t> columns() const;
};

struct RedundancyIndex {
  std::vector<RedundancyGroup> groups;  // sorted by (origin, level)
  std::vector<std::size_t> group_of;    // per column
};

enum class IndexMode {
  trust_metadata,  // group by metadata only
  verify_data      // also check nesting and complements against the data
};

/// Groups columns by source. In verify_data mode every claimed nesting and
/// complement relation is checked on `ds` and a DataError names the first
/// violation.
RedundancyIndex build_redundancy_index(std::span<const FeatureMeta> meta);
RedundancyIndex build_redundancy_index(const BinaryDataset& ds, IndexMode mode);

/// Without a disable column a complementary or zigzag pair is how a clause
/// gets switched off, so those pairs stay admissible.
enum class Regime { no_disable, disable };

struct CombinationCandidate {
  std::vector<std::size_t> columns;  // ascending
  friend bool operator==(const CombinationCandidate&, const CombinationCandidate&) = default;
};

/// The empty set, every singleton, and pairs {(c <= t_a), (c > t_b)}: any
/// a, b without a disable column, t_a < t_b with one. Never two columns of
/// the same direction.
std::vector<CombinationCandidate> enumerate_candidates(const RedundancyIndex& idx,
                                                       std::size_t group, Regime regime);

enum class BinarizeObjective {
  zero_one,  // relaxation objective of the two-level LP
  hamming
};

enum class Placeholder {
  fractional,    // unprocessed groups keep their LP values
  threshold_half // unprocessed groups rounded at 0.5
};

enum class GroupOrder {
  per_clause,  // fractional mass within the clause being binarized
  summed       // fractional mass summed over all clauses
};

struct RedundancyOptions {
  BinarizeObjective objective = BinarizeObjective::hamming;
  Placeholder placeholder = Placeholder::fractional;
  GroupOrder order = GroupOrder::per_clause;
  std::optional<Regime> regime;  // default: from ds.has_disable_column()
};

/// One committed decision of the sweep.
struct BinarizeStep {
  std::size_t clause = 0;
  std::size_t group = 0;
  WeightMatrix evaluation_point;  // weights the candidates were scored against
  CombinationCandidate chosen;
  double cost = 0.0;
};

/// Rounds each clause independently (other clauses stay at their LP
/// values): groups are visited by decreasing fractional mass and each gets
/// the candidate of least objective, already visited groups held at their
/// binary choice. Cost ties prefer fewer columns, then the lexicographically
/// smallest set. An integral input is returned as is.
TwoLevelRule redundancy_binarize(const WeightMatrix& frac, const BinaryDataset& ds, double theta,
                                 std::span<const double> column_costs,
                                 const RedundancyOptions& options = {},
                                 const RedundancyIndex* index = nullptr,
                                 std::vector<BinarizeStep>* trace = nullptr);

/// True when every entry is within kIntegralityTol of 0 or 1.
bool is_integral(const WeightMatrix& w);

/// Structural check of a binary clause against the candidate rules; returns
/// a description of the first violation.
std::optional<std::string> redundancy_violation(const RedundancyIndex& idx, const Clause& clause,
                                                Regime regime);

}  // namespace twolevel
