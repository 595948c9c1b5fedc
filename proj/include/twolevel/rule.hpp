#pragma once

// Clauses, two-level rules and the cost functions of both training
// formulations (0-1 error and minimal Hamming distance).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twolevel/data.hpp"

namespace twolevel {

/// Thrown when a rule and a dataset (or two rules) do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Form { cnf, dnf };

std::string to_string(Form form);
Form form_from_string(const std::string& s);

/// Binary selection vector w over d features, bit-packed like dataset rows.
class Clause {
 public:
  Clause() = default;
  explicit Clause(std::size_t d) : d_(d), bits_(BinaryDataset::words_for(d), 0) {}
  static Clause from_indices(std::size_t d, std::span<const std::size_t> selected);

  std::size_t arity() const { return d_; }
  bool selected(std::size_t j) const { return ((bits_[j / 64] >> (j % 64)) & 1U) != 0; }
  void set(std::size_t j, bool on = true);
  std::size_t count() const;
  std::vector<std::size_t> indices() const;
  const std::uint64_t* data() const { return bits_.data(); }

  friend bool operator==(const Clause&, const Clause&) = default;

 private:
  std::size_t d_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// R clauses combined as AND-of-ORs (CNF) or OR-of-ANDs (DNF). When
/// `disable_column` is set, column 0 is the constant-1 feature: a CNF clause
/// selecting it always outputs 1, a DNF term selecting it always outputs 0.
struct TwoLevelRule {
  Form form = Form::cnf;
  std::size_t d = 0;
  bool disable_column = false;
  std::vector<Clause> clauses;

  TwoLevelRule() = default;
  TwoLevelRule(Form f, std::size_t arity, std::size_t clause_count, bool has_disable = false);

  std::size_t size() const { return clauses.size(); }

  /// Selected features summed over clauses, not counting the disable column.
  std::size_t feature_count() const;

  friend bool operator==(const TwoLevelRule&, const TwoLevelRule&) = default;
};

/// Relaxed weights w_{j,r} in [0, 1], stored clause-major.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t d, std::size_t clauses, double value = 0.0)
      : d_(d), r_(clauses), w_(d * clauses, value) {}
  static WeightMatrix from_rule(const TwoLevelRule& rule);

  std::size_t arity() const { return d_; }
  std::size_t clauses() const { return r_; }
  double& at(std::size_t j, std::size_t r) { return w_[r * d_ + j]; }
  double at(std::size_t j, std::size_t r) const { return w_[r * d_ + j]; }
  std::span<double> clause(std::size_t r) { return {w_.data() + r * d_, d_}; }
  std::span<const double> clause(std::size_t r) const { return {w_.data() + r * d_, d_}; }
  std::span<const double> values() const { return w_; }

 private:
  std::size_t d_ = 0;
  std::size_t r_ = 0;
  std::vector<double> w_;
};

struct FractionalSolution {
  WeightMatrix w;
  double objective_value = 0.0;
};

/// Per-column sparsity weights; 1 for real features, `disable_cost` for the
/// disable column.
std::vector<double> default_column_costs(const BinaryDataset& ds, double disable_cost = 0.0);

struct CostReport {
  double accuracy_cost = 0.0;
  double sparsity_cost = 0.0;
  double total = 0.0;
};

/// Ideal clause output alphabet.
enum class Ideal : std::uint8_t { zero, one, dont_care };

/// Ternary n x R matrix of ideal clause outputs.
class IdealOutputs {
 public:
  IdealOutputs() = default;
  IdealOutputs(std::size_t n, std::size_t clauses, Ideal fill = Ideal::dont_care)
      : n_(n), r_(clauses), v_(n * clauses, fill) {}

  std::size_t rows() const { return n_; }
  std::size_t clauses() const { return r_; }
  Ideal& at(std::size_t i, std::size_t r) { return v_[i * r_ + r]; }
  Ideal at(std::size_t i, std::size_t r) const { return v_[i * r_ + r]; }

  /// y_i = 1 requires every entry 1; y_i = 0 requires at least one 0.
  bool consistent_with(std::span<const std::uint8_t> labels) const;

  friend bool operator==(const IdealOutputs&, const IdealOutputs&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 0;
  std::vector<Ideal> v_;
};

// ---------------------------------------------------------------------------
// Evaluation

/// OR_j a_ij w_j; the empty disjunction is 0.
bool eval_clause(const BinaryDataset& ds, const Clause& clause, std::size_t i);

/// AND_j of the selected features; the empty conjunction is 1. A term that
/// selects the disable column is 0.
bool eval_term(const BinaryDataset& ds, const Clause& clause, std::size_t i);

bool predict(const BinaryDataset& ds, const TwoLevelRule& rule, std::size_t i);
std::vector<std::uint8_t> predict_all(const BinaryDataset& ds, const TwoLevelRule& rule);

/// Dual form over the same column indices: flips CNF <-> DNF so that
/// dual(x) = NOT rule(NOT x), where NOT x negates every non-disable feature.
/// When `meta` is given every selected non-disable column must have its
/// negation column in `meta`, otherwise ShapeError.
TwoLevelRule de_morgan(const TwoLevelRule& rule,
                       std::optional<std::span<const FeatureMeta>> meta = std::nullopt);

/// Replaces each selected column by its complement column (e.g. to express
/// a CNF for NOT y as a DNF for y over the same data). Throws ShapeError if a
/// selected column has no complement.
TwoLevelRule complement_literals(const TwoLevelRule& rule,
                                 std::span<const std::optional<std::size_t>> complement);

// ---------------------------------------------------------------------------
// Costs. `column_costs` must have one entry per column.

/// Sum_i |yhat_i - y_i| + theta * sum_{r,j} cost_j w_jr.
CostReport zero_one_cost(const BinaryDataset& ds, const TwoLevelRule& rule, double theta,
                         std::span<const double> column_costs);

/// Minimal Hamming distance to a rule classifying each sample correctly.
/// CNF only; throws ShapeError for DNF.
CostReport hamming_cost(const BinaryDataset& ds, const TwoLevelRule& rule, double theta,
                        std::span<const double> column_costs);

/// Same formulas for relaxed weights.
CostReport hamming_cost(const BinaryDataset& ds, const WeightMatrix& w, double theta,
                        std::span<const double> column_costs);

/// Per-sample eta_i for a CNF rule.
std::vector<double> hamming_distances(const BinaryDataset& ds, const TwoLevelRule& rule);

/// Cost with explicit ideal outputs; DC entries contribute nothing. Throws
/// std::invalid_argument if `v` is inconsistent with the labels.
CostReport joint_cost(const BinaryDataset& ds, const TwoLevelRule& rule, const IdealOutputs& v,
                      double theta, std::span<const double> column_costs);

/// Objective of the two-level LP relaxation at fixed w: the tightest concave
/// interpolation of the CNF output for positives and the convex one for
/// negatives. Equals zero_one_cost at binary w.
CostReport interpolated_zero_one_cost(const BinaryDataset& ds, const WeightMatrix& w,
                                      double theta, std::span<const double> column_costs);

/// Fraction of misclassified samples. Throws std::invalid_argument when empty.
double error_rate(const BinaryDataset& ds, const TwoLevelRule& rule);

/// theta * sum_{r,j} cost_j w_jr
double sparsity_cost(const WeightMatrix& w, double theta, std::span<const double> column_costs);

// ---------------------------------------------------------------------------
// Serialization

/// {"format": "twolevel.rule", "version": 1, "form": "DNF", "d": ..,
///  "disable_column": false, "clauses": [{"features": [{"index": 3,
///  "name": "glucose > 127.5"}]}]}
nlohmann::json to_json(const TwoLevelRule& rule, std::span<const FeatureMeta> meta);
TwoLevelRule rule_from_json(const nlohmann::json& j);

/// IF/THEN rendering, one literal per line.
std::string explain(const TwoLevelRule& rule, std::span<const FeatureMeta> meta,
                    const std::string& label_name);

}  // namespace twolevel
