#include "twolevel/learners.hpp"

namespace twolevel {

lp::LinearProgram build_one_level_program(const BinaryDataset& ds,
                                          std::span<const std::size_t> subset, double theta,
                                          std::span<const double> column_costs) {
  const std::size_t d = ds.cols();
  if (column_costs.size() != d) throw ShapeError("column cost vector has wrong length");
  // Negative rows enter the objective directly through sum_i a_ij w_j.
  std::vector<double> w_cost(d);
  for (std::size_t j = 0; j < d; ++j) w_cost[j] = theta * column_costs[j];
  for (std::size_t i : subset) {
    if (ds.label(i)) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (ds.at(i, j)) w_cost[j] += 1.0;
    }
  }
  lp::LinearProgram prog;
  for (std::size_t j = 0; j < d; ++j) prog.add_variable(0.0, 1.0, w_cost[j], "w" + std::to_string(j));
  for (std::size_t i : subset) {
    if (!ds.label(i)) continue;
    const auto xi = prog.add_variable(0.0, 1.0, 1.0, "xi" + std::to_string(i));
    std::vector<lp::Term> terms{{xi, 1.0}};
    for (std::size_t j = 0; j < d; ++j) {
      if (ds.at(i, j)) terms.push_back({static_cast<std::uint32_t>(j), 1.0});
    }
    prog.add_constraint(std::move(terms), lp::Relation::greater_equal, 1.0);
  }
  return prog;
}

OneLevelResult learn_one_level(const BinaryDataset& ds, std::span<const std::size_t> subset,
                               double theta, std::span<const double> column_costs,
                               const LearnConfig& cfg) {
  if (subset.empty()) throw std::invalid_argument("one-level learner needs a nonempty sample set");
  const std::size_t d = ds.cols();
  const lp::LinearProgram prog = build_one_level_program(ds, subset, theta, column_costs);
  const lp::Solution sol = lp::solve(prog, cfg.lp_limits);
  if (sol.status != lp::Status::optimal) {
    throw SolverError("one-level LP ended with status " + lp::to_string(sol.status));
  }

  OneLevelResult out;
  out.fractional.w = WeightMatrix(d, 1);
  for (std::size_t j = 0; j < d; ++j) out.fractional.w.at(j, 0) = sol.x[j];
  out.fractional.objective_value = sol.objective_value;

  if (cfg.binarizer == BinarizerKind::simple) {
    out.clause = simple_binarize(out.fractional.w, cfg.simple_threshold).clauses[0];
  } else {
    const BinaryDataset rows = select_rows(ds, subset);
    RedundancyOptions opts;
    opts.objective = BinarizeObjective::hamming;
    opts.placeholder = cfg.placeholder;
    opts.order = cfg.group_order;
    out.clause = redundancy_binarize(out.fractional.w, rows, theta, column_costs, opts).clauses[0];
  }
  return out;
}

}  // namespace twolevel
