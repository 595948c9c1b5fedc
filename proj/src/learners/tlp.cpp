#include <optional>

#include "twolevel/learners.hpp"

namespace twolevel {

namespace {

// Adds the linking rows beta_ir >= w_jr for every active j, or only the
// variables when `link` is false.
lp::LinearProgram tlp_program(const BinaryDataset& ds, double theta, std::size_t R,
                              std::span<const double> column_costs, bool link,
                              std::vector<std::uint32_t>* beta_of) {
  const std::size_t n = ds.rows();
  const std::size_t d = ds.cols();
  if (column_costs.size() != d) throw ShapeError("column cost vector has wrong length");
  lp::LinearProgram prog;
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      prog.add_variable(0.0, 1.0, theta * column_costs[j],
                        "w" + std::to_string(j) + "_" + std::to_string(r));
    }
  }
  auto w_var = [&](std::size_t j, std::size_t r) { return static_cast<std::uint32_t>(r * d + j); };
  std::vector<std::uint32_t> psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = prog.add_variable(0.0, 1.0, 1.0, "psi" + std::to_string(i));
  }

  std::vector<std::uint32_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    active.clear();
    for (std::size_t j = 0; j < d; ++j) {
      if (ds.at(i, j)) active.push_back(static_cast<std::uint32_t>(j));
    }
    if (ds.label(i)) {
      // psi_i >= 1 - sum_j a_ij w_jr for every clause.
      for (std::size_t r = 0; r < R; ++r) {
        std::vector<lp::Term> terms{{psi[i], 1.0}};
        for (std::uint32_t j : active) terms.push_back({w_var(j, r), 1.0});
        prog.add_constraint(std::move(terms), lp::Relation::greater_equal, 1.0);
      }
      continue;
    }
    // beta_ir >= a_ij w_jr and psi_i >= sum_r beta_ir - (R - 1).
    std::vector<lp::Term> psi_row{{psi[i], 1.0}};
    for (std::size_t r = 0; r < R; ++r) {
      const auto beta = prog.add_variable(0.0, 1.0, 0.0,
                                          "beta" + std::to_string(i) + "_" + std::to_string(r));
      if (beta_of != nullptr) (*beta_of)[i * R + r] = beta;
      psi_row.push_back({beta, -1.0});
      if (!link) continue;
      for (std::uint32_t j : active) {
        prog.add_constraint({{beta, 1.0}, {w_var(j, r), -1.0}}, lp::Relation::greater_equal, 0.0);
      }
    }
    prog.add_constraint(std::move(psi_row), lp::Relation::greater_equal,
                        -static_cast<double>(R - 1));
  }
  return prog;
}

}  // namespace

lp::LinearProgram build_tlp_program(const BinaryDataset& ds, double theta, std::size_t R,
                                    std::span<const double> column_costs) {
  return tlp_program(ds, theta, R, column_costs, true, nullptr);
}

lp::Solution solve_tlp_program(const BinaryDataset& ds, double theta, std::size_t R,
                               std::span<const double> column_costs, const lp::Limits& limits) {
  const std::size_t d = ds.cols();
  std::vector<std::uint32_t> beta_of(ds.rows() * R, 0);
  const lp::LinearProgram base = tlp_program(ds, theta, R, column_costs, false, &beta_of);
  // Most linking rows are slack at the optimum (w is sparse), so they are
  // generated only when violated.
  const lp::RowSeparator separate = [&](std::span<const double> x) {
    std::vector<lp::Constraint> cuts;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      if (ds.label(i)) continue;
      for (std::size_t r = 0; r < R; ++r) {
        const std::uint32_t beta = beta_of[i * R + r];
        // Most violated link of this (sample, clause) pair only.
        std::optional<std::uint32_t> worst;
        double worst_gap = lp::kFeasibilityTol;
        for (std::size_t j = 0; j < d; ++j) {
          if (!ds.at(i, j)) continue;
          const auto w = static_cast<std::uint32_t>(r * d + j);
          if (x[w] - x[beta] > worst_gap) {
            worst_gap = x[w] - x[beta];
            worst = w;
          }
        }
        if (worst) cuts.push_back({{{beta, 1.0}, {*worst, -1.0}}, lp::Relation::greater_equal, 0.0});
      }
    }
    return cuts;
  };
  return lp::solve_lazy(base, separate, limits);
}

TlpResult learn_tlp(const BinaryDataset& ds, const LearnConfig& cfg) {
  cfg.validate();
  if (cfg.allow_disable && !ds.has_disable_column()) {
    throw std::invalid_argument("allow_disable needs a dataset with the disable column");
  }
  const auto costs = cfg.costs_for(ds);
  const std::size_t d = ds.cols();
  const lp::Solution sol = solve_tlp_program(ds, cfg.theta, cfg.R, costs, cfg.lp_limits);
  if (sol.status == lp::Status::infeasible) {
    throw SolverError("two-level LP reported infeasible");
  }

  TlpResult out;
  out.status = sol.status;
  out.fractional.w = WeightMatrix(d, cfg.R);
  for (std::size_t r = 0; r < cfg.R; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      out.fractional.w.at(j, r) = std::clamp(sol.x[r * d + j], 0.0, 1.0);
    }
  }
  out.fractional.objective_value = sol.objective_value;

  if (cfg.binarizer == BinarizerKind::simple) {
    out.rule = simple_binarize(out.fractional.w, cfg.simple_threshold, Form::cnf,
                               ds.has_disable_column());
  } else {
    RedundancyOptions opts;
    opts.objective = BinarizeObjective::zero_one;
    opts.placeholder = cfg.placeholder;
    opts.order = cfg.group_order;
    out.rule = redundancy_binarize(out.fractional.w, ds, cfg.theta, costs, opts);
  }
  out.cost = zero_one_cost(ds, out.rule, cfg.theta, costs);
  return out;
}

}  // namespace twolevel
