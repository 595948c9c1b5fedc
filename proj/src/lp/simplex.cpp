#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "twolevel/lp.hpp"

namespace twolevel::lp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPrimalTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kSingularTol = 1e-11;
constexpr double kDegenerateStep = 1e-12;
constexpr std::size_t kRefactorInterval = 100;
constexpr std::size_t kDegenerateRunForBland = 50;
constexpr double kCostPerturbation = 1e-6;

enum class VarStatus : std::uint8_t { basic, at_lower, at_upper };

// Dense storage with a list of touched positions, so clearing and scanning
// cost O(nonzeros) rather than O(rows).
struct SparseVector {
  std::vector<double> value;
  std::vector<std::uint32_t> index;
  std::vector<std::uint8_t> mark;

  explicit SparseVector(std::size_t m) : value(m, 0.0), mark(m, 0) {}

  void add(std::uint32_t i, double v) {
    if (!mark[i]) {
      mark[i] = 1;
      index.push_back(i);
    }
    value[i] += v;
  }

  void clear() {
    for (std::uint32_t i : index) {
      value[i] = 0.0;
      mark[i] = 0;
    }
    index.clear();
  }
};

// Working form: [A I] [x; s] = 0 with one logical s_i = -a_i x per row, so
// the bounds of s_i encode the row relation and the slack basis is I.
class DualSimplexEngine {
 public:
  explicit DualSimplexEngine(const LinearProgram& lp) : n_(lp.variables()), m_(0) {
    cost_.assign(n_, 0.0);
    lo_.assign(n_, 0.0);
    hi_.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      cost_[j] = lp.cost(j);
      lo_[j] = lp.lower(j);
      hi_[j] = lp.upper(j);
    }
    row_start_.assign(1, 0);
    std::vector<Constraint> rows;
    rows.reserve(lp.constraints());
    for (std::size_t i = 0; i < lp.constraints(); ++i) rows.push_back(lp.constraint(i));
    x_.assign(n_, 0.0);
    d_ = cost_;
    status_.assign(n_, VarStatus::at_lower);
    for (std::size_t j = 0; j < n_; ++j) {
      const bool upper = lo_[j] < hi_[j] && cost_[j] < 0.0;
      status_[j] = upper ? VarStatus::at_upper : VarStatus::at_lower;
      x_[j] = upper ? hi_[j] : lo_[j];
    }
    append_rows(rows);
  }

  std::size_t rows() const { return m_; }

  // Adds rows with their logicals basic. The reduced costs of the current
  // basis are unchanged, so dual feasibility survives and the dual simplex
  // can resume from here after a reinversion.
  void append_rows(std::span<const Constraint> rows) {
    for (const Constraint& c : rows) {
      const std::size_t i = m_++;
      for (const Term& t : c.terms) {
        if (t.var >= n_) throw std::out_of_range("generated row references unknown variable");
        row_col_.push_back(t.var);
        row_val_.push_back(t.coef);
      }
      row_start_.push_back(row_col_.size());
      // Structural bounds are finite, so the activity range gives the open
      // side of an inequality a finite bound and every logical is boxed.
      double act_lo = 0.0;
      double act_hi = 0.0;
      for (const Term& t : c.terms) {
        act_lo += std::min(t.coef * lo_[t.var], t.coef * hi_[t.var]);
        act_hi += std::max(t.coef * lo_[t.var], t.coef * hi_[t.var]);
      }
      const double b = c.rhs;
      double lo = -b;
      double hi = -b;
      if (c.relation == Relation::greater_equal) lo = std::min(-act_hi, hi);
      if (c.relation == Relation::less_equal) hi = std::max(-act_lo, lo);
      lo_.push_back(lo);
      hi_.push_back(hi);
      cost_.push_back(0.0);
      x_.push_back(0.0);
      d_.push_back(0.0);
      status_.push_back(VarStatus::basic);
      head_.push_back(static_cast<std::uint32_t>(n_ + i));
    }
    // Column storage (CSC) of A, rebuilt from the rows.
    col_start_.assign(n_ + 1, 0);
    for (std::uint32_t j : row_col_) ++col_start_[j + 1];
    for (std::size_t j = 0; j < n_; ++j) col_start_[j + 1] += col_start_[j];
    col_row_.resize(row_col_.size());
    col_val_.resize(row_col_.size());
    std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
        const std::uint32_t j = row_col_[k];
        col_row_[fill[j]] = static_cast<std::uint32_t>(i);
        col_val_[fill[j]] = row_val_[k];
        ++fill[j];
      }
    }
    reinvert();
  }

  Solution run(const Limits& limits, const RowSeparator* separate) {
    Solution sol;
    while (true) {
      iterate(limits, sol);
      if (sol.status != Status::optimal || separate == nullptr) break;
      const std::span<const double> x(x_.data(), n_);
      const std::vector<Constraint> cuts = (*separate)(x);
      if (cuts.empty()) break;
      append_rows(cuts);
    }
    sol.rows = m_;
    sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) {
      // Snap values that sit on a bound up to rounding.
      if (std::abs(sol.x[j] - lo_[j]) <= kPrimalTol) sol.x[j] = lo_[j];
      if (std::abs(sol.x[j] - hi_[j]) <= kPrimalTol) sol.x[j] = hi_[j];
    }
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < n_; ++j) sol.objective_value += cost_[j] * sol.x[j];
    return sol;
  }

 private:
  void iterate(const Limits& limits, Solution& sol) {
    std::size_t since_refactor = 0;
    std::size_t degenerate_run = 0;
    bool bland = false;
    bool fresh = true;
    bool perturbed = false;
    bool tried_perturbation = false;
    std::vector<double> rho(m_);
    SparseVector column(m_), flip_delta(m_);
    std::vector<double> alpha(n_ + m_, 0.0);
    std::vector<std::uint32_t> touched;
    touched.reserve(n_ + m_);

    while (true) {
      if (sol.iterations >= limits.max_iterations) {
        sol.status = Status::iteration_limit;
        break;
      }
      const std::ptrdiff_t r = choose_leaving(bland);
      if (r < 0) {
        if (!fresh || perturbed) {
          if (perturbed) {
            std::copy(true_cost_.begin(), true_cost_.end(), cost_.begin());
            perturbed = false;
            degenerate_run = 0;
          }
          reinvert();
          fresh = true;
          since_refactor = 0;
          continue;
        }
        sol.status = Status::optimal;
        break;
      }
      const std::uint32_t leaving = head_[static_cast<std::size_t>(r)];
      const bool below = x_[leaving] < lo_[leaving];
      const double target = below ? lo_[leaving] : hi_[leaving];

      // Pivot row alpha_j = (B^-1 a_j)_r via rho = B^-T e_r.
      std::fill(rho.begin(), rho.end(), 0.0);
      rho[static_cast<std::size_t>(r)] = 1.0;
      btran(rho);
      for (std::uint32_t j : touched) alpha[j] = 0.0;
      touched.clear();
      for (std::size_t i = 0; i < m_; ++i) {
        const double ri = rho[i];
        if (ri == 0.0) continue;
        for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
          const std::uint32_t j = row_col_[k];
          if (alpha[j] == 0.0) touched.push_back(j);
          alpha[j] += ri * row_val_[k];
          if (alpha[j] == 0.0) alpha[j] = std::numeric_limits<double>::denorm_min();
        }
        const auto s = static_cast<std::uint32_t>(n_ + i);
        alpha[s] = ri;
        touched.push_back(s);
      }

      std::vector<std::uint32_t> flips;
      const std::ptrdiff_t q = ratio_test(alpha, touched, below, x_[leaving] - target, bland, flips);
      if (q < 0) {
        if (!fresh) {
          reinvert();
          fresh = true;
          since_refactor = 0;
          continue;
        }
        sol.status = Status::infeasible;
        break;
      }
      const auto entering = static_cast<std::uint32_t>(q);

      column.clear();
      add_column(entering, 1.0, column);
      ftran(column);
      const double pivot = column.value[static_cast<std::size_t>(r)];
      const double row_pivot = alpha[entering];
      if (std::abs(pivot) < kSingularTol ||
          std::abs(pivot - row_pivot) > 1e-7 * (1.0 + std::abs(row_pivot))) {
        if (!fresh) {
          reinvert();
          fresh = true;
          since_refactor = 0;
          continue;
        }
        if (std::abs(pivot) < kSingularTol) {
          sol.status = Status::iteration_limit;
          break;
        }
      }

      // Bound flips of passed breakpoints.
      if (!flips.empty()) {
        flip_delta.clear();
        for (std::uint32_t j : flips) {
          const bool to_upper = status_[j] == VarStatus::at_lower;
          const double delta = to_upper ? hi_[j] - lo_[j] : lo_[j] - hi_[j];
          x_[j] += delta;
          status_[j] = to_upper ? VarStatus::at_upper : VarStatus::at_lower;
          add_column(j, delta, flip_delta);
        }
        ftran(flip_delta);
        for (std::uint32_t i : flip_delta.index) x_[head_[i]] -= flip_delta.value[i];
      }

      // Primal step.
      const double step = (x_[leaving] - target) / pivot;
      for (std::uint32_t i : column.index) x_[head_[i]] -= step * column.value[i];
      x_[entering] += step;
      x_[leaving] = target;

      // Dual step.
      const double dual_step = d_[entering] / row_pivot;
      for (std::uint32_t j : touched) {
        if (status_[j] != VarStatus::basic) d_[j] -= dual_step * alpha[j];
      }
      d_[entering] = 0.0;
      d_[leaving] = -dual_step;

      status_[leaving] = below ? VarStatus::at_lower : VarStatus::at_upper;
      if (lo_[leaving] == hi_[leaving]) status_[leaving] = VarStatus::at_lower;
      status_[entering] = VarStatus::basic;
      head_[static_cast<std::size_t>(r)] = entering;
      push_eta(static_cast<std::size_t>(r), column);

      ++sol.iterations;
      fresh = false;
      if (std::abs(dual_step) <= kDegenerateStep) {
        // First stall: break dual ties by perturbing costs, removed again at
        // optimality. A stall after that falls back to Bland's rule.
        if (++degenerate_run >= kDegenerateRunForBland) {
          if (!tried_perturbation) {
            perturb_costs();
            perturbed = true;
            tried_perturbation = true;
            degenerate_run = 0;
            reinvert();
            fresh = true;
            since_refactor = 0;
            continue;
          }
          bland = true;
        }
      } else {
        degenerate_run = 0;
        bland = false;
      }
      if (++since_refactor >= kRefactorInterval) {
        reinvert();
        fresh = true;
        since_refactor = 0;
      }
    }
  }

  // Shifts structural costs by a deterministic amount in the direction that
  // keeps the current bound status dual feasible.
  void perturb_costs() {
    true_cost_.assign(cost_.begin(), cost_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) {
      if (lo_[j] == hi_[j]) continue;
      std::uint64_t h = (j + 1) * 0x9E3779B97F4A7C15ULL;
      h = (h ^ (h >> 31)) * 0xBF58476D1CE4E5B9ULL;
      const double u = 0.5 + 0.5 * static_cast<double>(h >> 11) * 0x1.0p-53;
      const double delta = kCostPerturbation * u * (1.0 + std::abs(cost_[j]));
      cost_[j] += status_[j] == VarStatus::at_upper ? -delta : delta;
    }
  }

  void add_column(std::uint32_t j, double scale, std::vector<double>& out) const {
    if (j >= n_) {
      out[j - n_] += scale;
      return;
    }
    for (std::size_t k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      out[col_row_[k]] += scale * col_val_[k];
    }
  }

  void add_column(std::uint32_t j, double scale, SparseVector& out) const {
    if (j >= n_) {
      out.add(static_cast<std::uint32_t>(j - n_), scale);
      return;
    }
    for (std::size_t k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      out.add(col_row_[k], scale * col_val_[k]);
    }
  }

  double dot_column(std::uint32_t j, const std::vector<double>& y) const {
    if (j >= n_) return y[j - n_];
    double s = 0.0;
    for (std::size_t k = col_start_[j]; k < col_start_[j + 1]; ++k) s += y[col_row_[k]] * col_val_[k];
    return s;
  }

  std::size_t column_nnz(std::uint32_t j) const {
    return j >= n_ ? 1 : col_start_[j + 1] - col_start_[j];
  }

  void push_eta(std::size_t pos, const SparseVector& column) {
    eta_pos_.push_back(static_cast<std::uint32_t>(pos));
    eta_pivot_.push_back(column.value[pos]);
    for (std::uint32_t i : column.index) {
      if (i != pos && std::abs(column.value[i]) > 1e-14) {
        eta_index_.push_back(i);
        eta_value_.push_back(column.value[i]);
      }
    }
    eta_start_.push_back(eta_index_.size());
  }

  void clear_etas() {
    eta_pos_.clear();
    eta_pivot_.clear();
    eta_index_.clear();
    eta_value_.clear();
    eta_start_.assign(1, 0);
  }

  void ftran(std::vector<double>& v) const {
    base_solve(v);
    for (std::size_t e = 0; e < eta_pos_.size(); ++e) {
      const std::size_t p = eta_pos_[e];
      if (v[p] == 0.0) continue;
      const double vp = v[p] / eta_pivot_[e];
      v[p] = vp;
      for (std::size_t k = eta_start_[e]; k < eta_start_[e + 1]; ++k) {
        v[eta_index_[k]] -= eta_value_[k] * vp;
      }
    }
  }

  void ftran(SparseVector& v) const {
    base_solve(v);
    for (std::size_t e = 0; e < eta_pos_.size(); ++e) {
      const std::size_t p = eta_pos_[e];
      if (v.value[p] == 0.0) continue;
      const double vp = v.value[p] / eta_pivot_[e];
      v.value[p] = vp;
      for (std::size_t k = eta_start_[e]; k < eta_start_[e + 1]; ++k) {
        v.add(eta_index_[k], -eta_value_[k] * vp);
      }
    }
  }

  void btran(std::vector<double>& v) const {
    for (std::size_t e = eta_pos_.size(); e-- > 0;) {
      const std::size_t p = eta_pos_[e];
      double s = v[p];
      for (std::size_t k = eta_start_[e]; k < eta_start_[e + 1]; ++k) {
        s -= eta_value_[k] * v[eta_index_[k]];
      }
      v[p] = s / eta_pivot_[e];
    }
    base_solve_transposed(v);
  }

  // Refactorizes the current basis, then recomputes primal values and
  // reduced costs. The structural kernel gets a sparse LU; if that fails the
  // basis is rebuilt as a product of etas from the slack identity, dropping
  // dependent columns.
  void reinvert() {
    clear_etas();
    if (!factor_kernel()) {
      have_lu_ = false;
      rebuild_product_form();
    }
    for (std::size_t i = 0; i < m_; ++i) status_[head_[i]] = VarStatus::basic;
    recompute_duals();
    // Restore dual feasibility by moving boxed variables to the other bound.
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::basic || lo_[j] == hi_[j]) continue;
      if (status_[j] == VarStatus::at_lower && d_[j] < -kPrimalTol && std::isfinite(hi_[j])) {
        status_[j] = VarStatus::at_upper;
        x_[j] = hi_[j];
      } else if (status_[j] == VarStatus::at_upper && d_[j] > kPrimalTol && std::isfinite(lo_[j])) {
        status_[j] = VarStatus::at_lower;
        x_[j] = lo_[j];
      }
    }
    recompute_primals();
  }

  // With basic slacks as unit columns, B v = a reduces to K z = a_P on the
  // rows P whose slack is nonbasic and the basic structural columns.
  bool factor_kernel() {
    kernel_cols_.clear();
    kernel_rows_.clear();
    for (std::size_t i = 0; i < m_; ++i) {
      if (head_[i] < n_) kernel_cols_.push_back(head_[i]);
      if (status_[n_ + i] != VarStatus::basic) kernel_rows_.push_back(static_cast<std::uint32_t>(i));
    }
    const std::size_t k = kernel_cols_.size();
    if (kernel_rows_.size() != k) return false;
    row_pos_.assign(m_, -1);
    col_pos_.assign(n_, -1);
    for (std::size_t t = 0; t < k; ++t) {
      row_pos_[kernel_rows_[t]] = static_cast<std::int32_t>(t);
      col_pos_[kernel_cols_[t]] = static_cast<std::int32_t>(t);
    }
    if (k > 0) {
      std::vector<Eigen::Triplet<double>> entries;
      for (std::size_t t = 0; t < k; ++t) {
        const std::uint32_t j = kernel_cols_[t];
        for (std::size_t e = col_start_[j]; e < col_start_[j + 1]; ++e) {
          const std::int32_t row = row_pos_[col_row_[e]];
          if (row >= 0) entries.emplace_back(row, static_cast<int>(t), col_val_[e]);
        }
      }
      Eigen::SparseMatrix<double> kernel(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      kernel.setFromTriplets(entries.begin(), entries.end());
      kernel.makeCompressed();
      lu_.analyzePattern(kernel);
      lu_.factorize(kernel);
      if (lu_.info() != Eigen::Success) return false;
      // SparseLU does not flag near-singular kernels; check a solve instead.
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
      const Eigen::VectorXd probe = kernel * ones;
      const Eigen::VectorXd back = lu_.solve(probe);
      if (!back.allFinite() || (back - ones).lpNorm<Eigen::Infinity>() > 1e-6) return false;
    }
    for (std::size_t i = 0; i < m_; ++i) {
      if (row_pos_[i] < 0) head_[i] = static_cast<std::uint32_t>(n_ + i);
    }
    for (std::size_t t = 0; t < k; ++t) head_[kernel_rows_[t]] = kernel_cols_[t];
    have_lu_ = k > 0;
    return true;
  }

  // Solves B0 v' = v for the factorized basis B0 (before the etas).
  void base_solve(SparseVector& v) const {
    if (!have_lu_) return;
    const std::size_t k = kernel_cols_.size();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::uint32_t i : v.index) {
      const std::int32_t s = row_pos_[i];
      if (s >= 0) {
        rhs[s] = v.value[i];
        v.value[i] = 0.0;
      }
    }
    const Eigen::VectorXd z = lu_.solve(rhs);
    for (std::size_t t = 0; t < k; ++t) {
      const double zt = z[static_cast<Eigen::Index>(t)];
      if (zt == 0.0) continue;
      v.add(kernel_rows_[t], zt);
      const std::uint32_t j = kernel_cols_[t];
      for (std::size_t e = col_start_[j]; e < col_start_[j + 1]; ++e) {
        if (row_pos_[col_row_[e]] < 0) v.add(col_row_[e], -col_val_[e] * zt);
      }
    }
  }

  void base_solve(std::vector<double>& v) const {
    if (!have_lu_) return;
    const std::size_t k = kernel_cols_.size();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t t = 0; t < k; ++t) {
      rhs[static_cast<Eigen::Index>(t)] = v[kernel_rows_[t]];
      v[kernel_rows_[t]] = 0.0;
    }
    const Eigen::VectorXd z = lu_.solve(rhs);
    for (std::size_t t = 0; t < k; ++t) {
      const double zt = z[static_cast<Eigen::Index>(t)];
      v[kernel_rows_[t]] = zt;
      if (zt == 0.0) continue;
      const std::uint32_t j = kernel_cols_[t];
      for (std::size_t e = col_start_[j]; e < col_start_[j + 1]; ++e) {
        if (row_pos_[col_row_[e]] < 0) v[col_row_[e]] -= col_val_[e] * zt;
      }
    }
  }

  // Solves B0^T y' = y.
  void base_solve_transposed(std::vector<double>& y) const {
    if (!have_lu_) return;
    const std::size_t k = kernel_cols_.size();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
    for (std::size_t t = 0; t < k; ++t) rhs[static_cast<Eigen::Index>(t)] = y[kernel_rows_[t]];
    for (std::size_t i = 0; i < m_; ++i) {
      if (row_pos_[i] >= 0 || y[i] == 0.0) continue;
      for (std::size_t e = row_start_[i]; e < row_start_[i + 1]; ++e) {
        const std::int32_t t = col_pos_[row_col_[e]];
        if (t >= 0) rhs[t] -= row_val_[e] * y[i];
      }
    }
    const Eigen::VectorXd yp = lu_.transpose().solve(rhs);
    for (std::size_t t = 0; t < k; ++t) y[kernel_rows_[t]] = yp[static_cast<Eigen::Index>(t)];
  }

  void rebuild_product_form() {
    std::vector<std::uint32_t> occupant(m_);
    std::vector<bool> slack_stays(m_, false);
    std::vector<std::uint32_t> structurals;
    for (std::size_t i = 0; i < m_; ++i) {
      occupant[i] = static_cast<std::uint32_t>(n_ + i);
      const std::uint32_t b = head_[i];
      if (b >= n_) {
        slack_stays[b - n_] = true;
      } else {
        structurals.push_back(b);
      }
    }
    std::sort(structurals.begin(), structurals.end(), [&](std::uint32_t a, std::uint32_t b) {
      const auto na = column_nnz(a);
      const auto nb = column_nnz(b);
      return na != nb ? na < nb : a < b;
    });
    std::vector<bool> replaced(m_, false);
    SparseVector column(m_);
    for (std::uint32_t q : structurals) {
      column.clear();
      add_column(q, 1.0, column);
      ftran(column);
      std::ptrdiff_t best = -1;
      double best_abs = kSingularTol;
      for (std::uint32_t i : column.index) {
        if (slack_stays[i] || replaced[i]) continue;
        const double a = std::abs(column.value[i]);
        if (a > best_abs || (a == best_abs && best >= 0 && i < static_cast<std::size_t>(best))) {
          best_abs = a;
          best = static_cast<std::ptrdiff_t>(i);
        }
      }
      if (best < 0) {
        // Dependent column: leave it nonbasic at its nearer bound.
        status_[q] = std::abs(x_[q] - lo_[q]) <= std::abs(x_[q] - hi_[q]) ? VarStatus::at_lower
                                                                             : VarStatus::at_upper;
        x_[q] = status_[q] == VarStatus::at_lower ? lo_[q] : hi_[q];
        continue;
      }
      const auto p = static_cast<std::size_t>(best);
      push_eta(p, column);
      replaced[p] = true;
      occupant[p] = q;
    }
    head_ = occupant;
  }

  void recompute_primals() {
    std::vector<double> rhs(m_, 0.0);
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      if (status_[j] == VarStatus::basic) continue;
      if (status_[j] == VarStatus::at_lower) x_[j] = lo_[j];
      if (status_[j] == VarStatus::at_upper) x_[j] = hi_[j];
      if (x_[j] != 0.0) add_column(static_cast<std::uint32_t>(j), -x_[j], rhs);
    }
    ftran(rhs);
    for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] = rhs[i];
  }

  void recompute_duals() {
    std::vector<double> y(m_);
    for (std::size_t i = 0; i < m_; ++i) y[i] = cost_[head_[i]];
    btran(y);
    for (std::size_t j = 0; j < n_ + m_; ++j) {
      d_[j] = status_[j] == VarStatus::basic
                  ? 0.0
                  : cost_[j] - dot_column(static_cast<std::uint32_t>(j), y);
    }
  }

  std::ptrdiff_t choose_leaving(bool bland) const {
    std::ptrdiff_t best = -1;
    double best_value = kPrimalTol;
    std::uint32_t best_var = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t i = 0; i < m_; ++i) {
      const std::uint32_t b = head_[i];
      const double v = x_[b];
      const double infeas = v < lo_[b] ? lo_[b] - v : (v > hi_[b] ? v - hi_[b] : 0.0);
      if (infeas <= kPrimalTol) continue;
      if (bland) {
        if (b < best_var) {
          best_var = b;
          best = static_cast<std::ptrdiff_t>(i);
        }
      } else if (infeas > best_value) {
        best_value = infeas;
        best = static_cast<std::ptrdiff_t>(i);
      }
    }
    return best;
  }

  struct Breakpoint {
    double ratio;
    double magnitude;
    std::uint32_t var;
  };

  // Bound-flipping dual ratio test. Returns the entering variable or -1 when
  // the dual is unbounded (primal infeasible). Passed breakpoints of boxed
  // variables are returned in `flips`.
  std::ptrdiff_t ratio_test(const std::vector<double>& alpha,
                            const std::vector<std::uint32_t>& touched, bool below,
                            double infeasibility, bool bland,
                            std::vector<std::uint32_t>& flips) const {
    std::vector<Breakpoint> points;
    for (std::uint32_t j : touched) {
      if (status_[j] == VarStatus::basic || lo_[j] == hi_[j]) continue;
      const double a = alpha[j];
      if (std::abs(a) <= kPivotTol) continue;
      const bool at_lower = status_[j] == VarStatus::at_lower;
      // Entering must push the leaving variable back toward its bound.
      const bool eligible = below ? (at_lower ? a < 0 : a > 0) : (at_lower ? a > 0 : a < 0);
      if (!eligible) continue;
      const double dj = at_lower ? std::max(d_[j], 0.0) : std::max(-d_[j], 0.0);
      points.push_back({dj / std::abs(a), std::abs(a), j});
    }
    if (points.empty()) return -1;
    // Breakpoints are consumed in ratio order from a heap; usually only a
    // few are passed before the step stops.
    const auto later = [](const Breakpoint& a, const Breakpoint& b) {
      return a.ratio != b.ratio ? a.ratio > b.ratio : a.var > b.var;
    };
    std::make_heap(points.begin(), points.end(), later);
    const auto pop = [&] {
      std::pop_heap(points.begin(), points.end(), later);
      const Breakpoint p = points.back();
      points.pop_back();
      return p;
    };

    if (bland) {
      const Breakpoint first = pop();
      std::uint32_t var = first.var;
      while (!points.empty() && points.front().ratio <= first.ratio + 1e-12) {
        var = std::min(var, pop().var);
      }
      return var;
    }

    double slope = std::abs(infeasibility);
    while (!points.empty()) {
      const Breakpoint p = pop();
      const double range = hi_[p.var] - lo_[p.var];
      if (std::isfinite(range) && slope - p.magnitude * range > 0.0) {
        slope -= p.magnitude * range;
        flips.push_back(p.var);
        continue;
      }
      // Among ties at the stopping breakpoint take the largest pivot.
      Breakpoint pick = p;
      while (!points.empty() && points.front().ratio <= p.ratio + 1e-12) {
        const Breakpoint t = pop();
        if (t.magnitude > pick.magnitude) pick = t;
      }
      return pick.var;
    }
    return -1;
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<double> cost_, lo_, hi_;
  std::vector<std::size_t> row_start_, col_start_;
  std::vector<std::uint32_t> row_col_, col_row_;
  std::vector<double> row_val_, col_val_;

  std::vector<double> true_cost_;  // saved while costs are perturbed
  std::vector<double> x_, d_;
  std::vector<VarStatus> status_;
  std::vector<std::uint32_t> head_;

  std::vector<std::uint32_t> eta_pos_;
  std::vector<double> eta_pivot_;

  std::vector<std::uint32_t> kernel_rows_;
  std::vector<std::uint32_t> kernel_cols_;
  std::vector<std::int32_t> row_pos_;
  std::vector<std::int32_t> col_pos_;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;  // transpose() is non-const
  bool have_lu_ = false;
  std::vector<std::size_t> eta_start_{0};
  std::vector<std::uint32_t> eta_index_;
  std::vector<double> eta_value_;
};

}  // namespace

std::uint32_t LinearProgram::add_variable(double lo, double hi, double cost, std::string name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(cost)) {
    throw std::invalid_argument("variable bounds and cost must be finite");
  }
  if (lo > hi) throw std::invalid_argument("variable lower bound exceeds upper bound");
  lo_.push_back(lo);
  hi_.push_back(hi);
  cost_.push_back(cost);
  names_.push_back(std::move(name));
  return static_cast<std::uint32_t>(cost_.size() - 1);
}

void LinearProgram::add_constraint(std::vector<Term> terms, Relation relation, double rhs) {
  if (!std::isfinite(rhs)) throw std::invalid_argument("constraint right-hand side must be finite");
  for (const Term& t : terms) {
    if (t.var >= cost_.size()) throw std::out_of_range("constraint references unknown variable");
    if (!std::isfinite(t.coef)) throw std::invalid_argument("constraint coefficient must be finite");
  }
  rows_.push_back({std::move(terms), relation, rhs});
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    worst = std::max({worst, lo_[j] - x[j], x[j] - hi_[j]});
  }
  for (const Constraint& c : rows_) {
    double activity = 0.0;
    for (const Term& t : c.terms) activity += t.coef * x[t.var];
    switch (c.relation) {
      case Relation::greater_equal:
        worst = std::max(worst, c.rhs - activity);
        break;
      case Relation::less_equal:
        worst = std::max(worst, activity - c.rhs);
        break;
      case Relation::equal:
        worst = std::max(worst, std::abs(activity - c.rhs));
        break;
    }
  }
  return worst;
}

double LinearProgram::objective(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) total += cost_[j] * x[j];
  return total;
}

std::string to_string(Status status) {
  switch (status) {
    case Status::optimal:
      return "OPTIMAL";
    case Status::infeasible:
      return "INFEASIBLE";
    case Status::iteration_limit:
      return "ITERATION_LIMIT";
  }
  return "UNKNOWN";
}

Solution DualSimplex::solve(const LinearProgram& lp, const Limits& limits) const {
  DualSimplexEngine engine(lp);
  return engine.run(limits, nullptr);
}

Solution DualSimplex::solve_lazy(const LinearProgram& lp, const RowSeparator& separate,
                                 const Limits& limits) const {
  DualSimplexEngine engine(lp);
  return engine.run(limits, &separate);
}

Solution solve(const LinearProgram& lp, const Limits& limits) {
  return DualSimplex{}.solve(lp, limits);
}

Solution solve_lazy(const LinearProgram& lp, const RowSeparator& separate, const Limits& limits) {
  return DualSimplex{}.solve_lazy(lp, separate, limits);
}

std::vector<bool> is_integral(std::span<const double> x, double tol) {
  std::vector<bool> flags(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    flags[j] = std::min(std::abs(x[j]), std::abs(x[j] - 1.0)) <= tol;
  }
  return flags;
}

}  // namespace twolevel::lp
