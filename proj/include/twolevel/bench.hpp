#pragma once

// Cross-validated theta/R sweeps over the rule learners, and the reductions
// used to report them (minimal-error tables, accuracy/sparsity fronts).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twolevel/data.hpp"
#include "twolevel/learners.hpp"

namespace twolevel::bench {

/// {A * 10^B : A in {1, 2, 5}, B in -4..1}, ascending.
std::vector<double> default_thetas();

struct SweepGrid {
  std::vector<double> thetas = default_thetas();
  std::vector<std::size_t> Rs{1, 2, 3, 4, 5};
  std::vector<Algorithm> algorithms{Algorithm::scs, Algorithm::scn, Algorithm::tlp, Algorithm::bcd,
                                    Algorithm::am};
  std::size_t folds = 10;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument for an empty axis, theta <= 0, R < 1 or
  /// fewer than 2 folds.
  void validate() const;
};

struct SweepRecord {
  Algorithm algorithm = Algorithm::scs;
  double theta = 0.0;
  std::size_t R = 1;
  std::size_t fold = 0;
  double train_error = 0.0;
  double test_error = 0.0;
  std::size_t feature_count = 0;  // non-disable selections summed over clauses
  double wall_time = 0.0;         // seconds
  std::size_t iterations = 0;
  std::optional<std::string> error;  // learner failure; the numbers are then meaningless

  bool ok() const { return !error.has_value(); }
};

struct SweepResult {
  std::vector<SweepRecord> records;

  /// Sorts by (algorithm, R, theta, fold).
  void canonicalize();
};

struct SweepOptions {
  /// Base learner settings; theta, R, seed and form are set per cell.
  LearnConfig learner;
  Form form = Form::dnf;
  int quantiles = 9;
  /// Fit quantile thresholds on the whole dataset instead of per training
  /// fold. Leaks test-fold statistics; kept for comparison only.
  bool global_binarize = false;
  std::size_t workers = 1;
  /// Called once per finished record, serialized by the sweep.
  std::function<void(const SweepRecord&)> on_record;
};

/// Every (algorithm, theta, R, fold) cell, canonically ordered. Cells are
/// independent and run on `workers` threads; the result does not depend on
/// the worker count. Learner exceptions are stored in the record.
SweepResult run_sweep(const RawDataset& raw, const SweepGrid& grid, const SweepOptions& options);

/// Seed handed to the learner of one cell.
std::uint64_t cell_seed(std::uint64_t grid_seed, Algorithm algorithm, std::size_t theta_index,
                        std::size_t R, std::size_t fold);

// ---------------------------------------------------------------------------
// Serialization. Results are versioned JSON lines:
//   {"format": "twolevel.sweep", "version": 1, "algorithm": "AM", "theta": 0.001,
//    "R": 2, "fold": 0, "train_error": 0.2, "test_error": 0.25,
//    "feature_count": 6, "iterations": 3, "error": null}
// Wall times go to a separate file so result files stay byte-identical
// across runs.

inline constexpr int kSweepFormatVersion = 1;

nlohmann::json to_json(const SweepRecord& record, bool with_time = false);
SweepRecord sweep_record_from_json(const nlohmann::json& j);

void write_jsonl(const SweepResult& result, std::ostream& out);
void write_timings_jsonl(const SweepResult& result, std::ostream& out);
/// Reads result lines; `timings` (if given) fills wall_time by key.
SweepResult read_jsonl(std::istream& in, std::istream* timings = nullptr);
void write_csv(const SweepResult& result, std::ostream& out);

// ---------------------------------------------------------------------------
// Aggregation

enum class Split { train, test };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

/// Fold averages of one (algorithm, theta, R) cell. Cells with a failed fold
/// are kept but flagged; reductions skip them.
struct CellSummary {
  Algorithm algorithm = Algorithm::scs;
  double theta = 0.0;
  std::size_t R = 1;
  std::size_t folds = 0;
  std::size_t failed = 0;
  double train_error = 0.0;
  double test_error = 0.0;
  double feature_count = 0.0;

  double error(Split split) const { return split == Split::train ? train_error : test_error; }
};

std::vector<CellSummary> summarize(const SweepResult& result);
void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out);

struct MinErrorEntry {
  Algorithm algorithm = Algorithm::scs;
  std::size_t R = 1;
  double theta = 0.0;  // minimizer; ties go to the larger theta
  double test_error = 0.0;
  double train_error = 0.0;
  double feature_count = 0.0;
  bool best = false;  // minimal over R for this algorithm
};

/// Minimum over theta of the fold-averaged test error, per (algorithm, R).
std::vector<MinErrorEntry> min_error_table(const SweepResult& result);

/// Markdown table in percent, one row per R and one column per algorithm,
/// with the per-algorithm best marked in bold.
std::string format_min_error_table(const std::vector<MinErrorEntry>& table);

struct ParetoPoint {
  double feature_count = 0.0;
  double error = 0.0;
  double theta = 0.0;

  friend bool operator==(const ParetoPoint&, const ParetoPoint&) = default;
};

/// Non-dominated subset (both coordinates minimized), sorted by feature
/// count with strictly decreasing error. Of equal points the first is kept.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

/// Front over the theta sweep of one (algorithm, R).
std::vector<ParetoPoint> pareto_front(const SweepResult& result, Algorithm algorithm, std::size_t R,
                                      Split split);

}  // namespace twolevel::bench
