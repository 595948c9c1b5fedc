#pragma once

// Rule learners. All of them learn CNF rules; DNF rules come from learning a
// CNF on negated data and dualizing (see learn()).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twolevel/binarization.hpp"
#include "twolevel/data.hpp"
#include "twolevel/lp.hpp"
#include "twolevel/rule.hpp"

namespace twolevel {

enum class Algorithm {
  scs,  // set covering, threshold rounding
  scn,  // set covering, redundancy-aware rounding
  tlp,  // two-level LP relaxation
  bcd,  // block coordinate descent
  am    // alternating minimization
};

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

enum class BinarizerKind { simple, redundancy };

/// Clause visiting order for block coordinate descent.
enum class UpdateOrder { greedy, cyclic, random };

struct LearnConfig {
  double theta = 1e-3;
  std::size_t R = 1;
  Form form = Form::cnf;
  /// Must match whether the dataset carries the disable column; learn()
  /// appends it when missing.
  bool allow_disable = false;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  /// One weight per column; empty means 1 per feature and `disable_cost`
  /// for the disable column.
  std::vector<double> column_costs;
  double disable_cost = 0.0;

  BinarizerKind binarizer = BinarizerKind::redundancy;
  double simple_threshold = 0.2;
  Placeholder placeholder = Placeholder::fractional;
  GroupOrder group_order = GroupOrder::per_clause;
  UpdateOrder update_order = UpdateOrder::greedy;
  lp::Limits lp_limits;

  /// Throws std::invalid_argument for theta < 0, R < 1 or max_iters < 1.
  void validate() const;

  /// column_costs, or the defaults for `ds`. Throws ShapeError on a length
  /// mismatch.
  std::vector<double> costs_for(const BinaryDataset& ds) const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  double objective = 0.0;
  std::string phase;                  // "init", "update"
  std::optional<std::size_t> clause;  // clause changed by the update
  bool accepted = false;
};

struct LearnTrace {
  std::vector<TraceRecord> records;

  std::vector<double> accepted_objectives() const;
};

/// Thrown when an LP that cannot be infeasible comes back otherwise.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OneLevelResult {
  FractionalSolution fractional;  // single column of relaxed weights
  Clause clause;
};

/// Single OR-clause minimizing sum over positives of max(0, 1 - a.w) plus
/// sum over negatives of a.w plus theta * cost.w, over rows `subset`.
/// Throws std::invalid_argument for an empty subset.
OneLevelResult learn_one_level(const BinaryDataset& ds, std::span<const std::size_t> subset,
                               double theta, std::span<const double> column_costs,
                               const LearnConfig& cfg = {});

/// Clause by clause: learn on the remaining rows, then drop rows the new
/// clause outputs 0 on.
TwoLevelRule learn_set_cover(const BinaryDataset& ds, const LearnConfig& cfg);

struct TlpResult {
  FractionalSolution fractional;
  TwoLevelRule rule;
  CostReport cost;  // zero_one_cost of `rule`
  lp::Status status = lp::Status::optimal;
};

/// The LP relaxation of the 0-1 error program (tightest interpolations of
/// AND and OR), rounded with the configured binarizer.
TlpResult learn_tlp(const BinaryDataset& ds, const LearnConfig& cfg);

/// The LP of learn_tlp, exposed for inspection and export. Variables are
/// w (clause-major, d per clause), then psi per sample, then beta per
/// (negative sample, clause).
lp::LinearProgram build_tlp_program(const BinaryDataset& ds, double theta, std::size_t R,
                                    std::span<const double> column_costs);

/// Optimum of build_tlp_program, with the beta >= w linking rows added
/// lazily as they become violated.
lp::Solution solve_tlp_program(const BinaryDataset& ds, double theta, std::size_t R,
                               std::span<const double> column_costs, const lp::Limits& limits = {});

/// The one-level LP over rows `subset`: w first, then one xi per positive.
lp::LinearProgram build_one_level_program(const BinaryDataset& ds,
                                          std::span<const std::size_t> subset, double theta,
                                          std::span<const double> column_costs);

/// Positive rows plus the negative rows every clause other than `r0`
/// (0-based) outputs 1 on.
std::vector<std::size_t> bcd_filter_samples(const BinaryDataset& ds, const TwoLevelRule& rule,
                                            std::size_t r0);

struct IterativeResult {
  TwoLevelRule rule;
  LearnTrace trace;
  CostReport cost;  // hamming_cost of `rule`
  std::size_t iterations = 0;
};

/// Starts from set covering; each iteration re-learns one clause on its
/// filtered rows and keeps the change when the Hamming cost does not rise.
IterativeResult learn_bcd(const BinaryDataset& ds, const LearnConfig& cfg);

/// Ideal outputs for a CNF rule: all 1 on positives; on negatives 0 at the
/// clause of least activation, DC elsewhere. Ties go to the clause whose
/// center (mean row over negatives tied or minimal at it) is nearest in l1,
/// then to the lowest index.
IdealOutputs am_update_v(const BinaryDataset& ds, const TwoLevelRule& rule);

/// Alternates am_update_v and per-clause one-level solves on the rows each
/// clause is responsible for; stops at the first iteration without strict
/// improvement and returns the best rule seen.
IterativeResult learn_am(const BinaryDataset& ds, const LearnConfig& cfg);

struct LearnResult {
  TwoLevelRule rule;
  LearnTrace trace;
  std::size_t iterations = 0;
};

/// Runs `algorithm` in the requested form. Appends the disable column when
/// cfg.allow_disable is set and it is missing; the returned rule then has
/// disable_column set and one more column than `ds`. DNF rules are learned
/// as a CNF on negate(ds) and mapped back with de_morgan.
LearnResult learn(Algorithm algorithm, const BinaryDataset& ds, LearnConfig cfg);

}  // namespace twolevel
