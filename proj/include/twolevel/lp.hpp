#pragma once

// Linear programs over box-bounded variables with sparse rows, and a
// bounded-variable dual revised simplex to solve them.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace twolevel::lp {

inline constexpr double kFeasibilityTol = 1e-7;
inline constexpr double kObjectiveTol = 1e-6;
inline constexpr double kIntegralityTol = 1e-6;

enum class Relation { greater_equal, less_equal, equal };

struct Term {
  std::uint32_t var;
  double coef;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::greater_equal;
  double rhs = 0.0;
};

/// minimize c^T x  s.t.  rows,  lo <= x <= hi  (lo, hi finite).
class LinearProgram {
 public:
  /// Returns the new variable's index. Throws std::invalid_argument unless
  /// lo <= hi and all values are finite.
  std::uint32_t add_variable(double lo, double hi, double cost, std::string name = {});
  void add_constraint(std::vector<Term> terms, Relation relation, double rhs);

  std::size_t variables() const { return cost_.size(); }
  std::size_t constraints() const { return rows_.size(); }
  double cost(std::size_t j) const { return cost_[j]; }
  double lower(std::size_t j) const { return lo_[j]; }
  double upper(std::size_t j) const { return hi_[j]; }
  const std::string& name(std::size_t j) const { return names_[j]; }
  const Constraint& constraint(std::size_t i) const { return rows_[i]; }
  void set_cost(std::size_t j, double c) { cost_[j] = c; }

  /// Largest violation of any row or bound at x.
  double max_violation(std::span<const double> x) const;
  double objective(std::span<const double> x) const;

 private:
  std::vector<double> cost_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<std::string> names_;
  std::vector<Constraint> rows_;
};

enum class Status { optimal, infeasible, iteration_limit };

std::string to_string(Status status);

struct Solution {
  std::vector<double> x;
  double objective_value = 0.0;
  Status status = Status::infeasible;
  std::size_t iterations = 0;
  std::size_t rows = 0;  // constraint rows at termination, generated ones included
};

/// Returns constraints violated by the structural values x; an empty result
/// means x is accepted.
using RowSeparator = std::function<std::vector<Constraint>(std::span<const double> x)>;

struct Limits {
  std::size_t max_iterations = 2'000'000;
};

/// Solver interface so an external backend can stand in for the built-in one.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual Solution solve(const LinearProgram& lp, const Limits& limits) const = 0;
};

/// Dual simplex with bound flipping, product-form basis updates and Bland's
/// rule after a run of degenerate pivots. Deterministic for a given input.
class DualSimplex final : public Solver {
 public:
  Solution solve(const LinearProgram& lp, const Limits& limits) const override;

  /// Solves `lp` extended by rows produced on demand: after each optimal
  /// solve the separator is asked for violated rows, which are appended
  /// before the dual simplex resumes from the current basis.
  Solution solve_lazy(const LinearProgram& lp, const RowSeparator& separate,
                      const Limits& limits) const;
};

/// Solves with the built-in dual simplex.
Solution solve(const LinearProgram& lp, const Limits& limits = {});

Solution solve_lazy(const LinearProgram& lp, const RowSeparator& separate,
                    const Limits& limits = {});

/// flag_j = min(|x_j|, |x_j - 1|) <= tol
std::vector<bool> is_integral(std::span<const double> x, double tol = kIntegralityTol);

/// Writes the program in CPLEX LP text format (Minimize / Subject To /
/// Bounds / End). Variables without a name are written as x<index>.
void write_cplex_lp(const LinearProgram& lp, std::ostream& out);

}  // namespace twolevel::lp
