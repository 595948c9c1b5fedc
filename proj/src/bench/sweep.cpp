#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "twolevel/bench.hpp"

namespace twolevel::bench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct FoldData {
  BinaryDataset train;
  BinaryDataset test;
  std::string error;  // binarization failure, reported on every cell of the fold
};

struct Job {
  Algorithm algorithm;
  std::size_t theta_index;
  std::size_t R;
  std::size_t fold;
};

FoldData prepare_fold(const RawDataset& raw, const FoldPlan& plan, std::size_t fold,
                      const SweepOptions& options, const FeatureBinarizer* global) {
  FoldData out;
  try {
    const auto train_rows = plan.train_rows(fold);
    const auto test_rows = plan.test_rows(fold);
    const RawDataset train_raw = raw.subset(train_rows);
    const RawDataset test_raw = raw.subset(test_rows);
    const FeatureBinarizer fitted =
        global ? *global : FeatureBinarizer::fit(train_raw, BinarizeOptions{options.quantiles});
    out.train = fitted.transform(train_raw);
    out.test = fitted.transform(test_raw);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SweepRecord run_cell(const Job& job, const SweepGrid& grid, const SweepOptions& options,
                     const FoldData& data) {
  SweepRecord rec;
  rec.algorithm = job.algorithm;
  rec.theta = grid.thetas[job.theta_index];
  rec.R = job.R;
  rec.fold = job.fold;
  if (!data.error.empty()) {
    rec.error = data.error;
    return rec;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    LearnConfig cfg = options.learner;
    cfg.theta = rec.theta;
    cfg.R = rec.R;
    cfg.form = options.form;
    cfg.seed = cell_seed(grid.seed, job.algorithm, job.theta_index, job.R, job.fold);
    const LearnResult res = learn(job.algorithm, data.train, cfg);
    const BinaryDataset& train = data.train;
    if (res.rule.disable_column && !train.has_disable_column()) {
      rec.train_error = error_rate(append_disable_column(train), res.rule);
      rec.test_error = error_rate(append_disable_column(data.test), res.rule);
    } else {
      rec.train_error = error_rate(train, res.rule);
      rec.test_error = error_rate(data.test, res.rule);
    }
    rec.feature_count = res.rule.feature_count();
    rec.iterations = res.iterations;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

std::vector<double> default_thetas() {
  std::vector<double> out;
  for (int b = -4; b <= 1; ++b) {
    for (double a : {1.0, 2.0, 5.0}) {
      // Parse the decimal literal so 2e-4 is the closest double to 0.0002.
      out.push_back(std::stod(std::to_string(static_cast<int>(a)) + "e" + std::to_string(b)));
    }
  }
  return out;
}

void SweepGrid::validate() const {
  if (thetas.empty() || Rs.empty() || algorithms.empty()) {
    throw std::invalid_argument("sweep grid has an empty axis");
  }
  for (double t : thetas) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("theta values must be positive");
  }
  for (std::size_t r : Rs) {
    if (r < 1) throw std::invalid_argument("clause counts must be at least 1");
  }
  if (folds < 2) throw std::invalid_argument("fold count must be at least 2");
}

void SweepResult::canonicalize() {
  std::stable_sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    return std::tie(a.algorithm, a.R, a.theta, a.fold) < std::tie(b.algorithm, b.R, b.theta, b.fold);
  });
}

std::uint64_t cell_seed(std::uint64_t grid_seed, Algorithm algorithm, std::size_t theta_index,
                        std::size_t R, std::size_t fold) {
  std::uint64_t h = splitmix64(grid_seed);
  for (std::uint64_t part : {static_cast<std::uint64_t>(algorithm), std::uint64_t{theta_index},
                             std::uint64_t{R}, std::uint64_t{fold}}) {
    h = splitmix64(h ^ part);
  }
  return h;
}

SweepResult run_sweep(const RawDataset& raw, const SweepGrid& grid, const SweepOptions& options) {
  grid.validate();
  options.learner.validate();
  if (!options.learner.column_costs.empty()) {
    throw std::invalid_argument("sweeps use default column costs; column widths vary per fold");
  }
  raw.validate();
  const FoldPlan plan = stratified_folds(raw.labels, grid.folds, grid.seed);

  std::optional<FeatureBinarizer> global;
  if (options.global_binarize) global = FeatureBinarizer::fit(raw, BinarizeOptions{options.quantiles});
  std::vector<FoldData> folds;
  folds.reserve(grid.folds);
  for (std::size_t f = 0; f < grid.folds; ++f) {
    folds.push_back(prepare_fold(raw, plan, f, options, global ? &*global : nullptr));
  }

  std::vector<Job> jobs;
  for (Algorithm a : grid.algorithms) {
    for (std::size_t R : grid.Rs) {
      for (std::size_t t = 0; t < grid.thetas.size(); ++t) {
        for (std::size_t f = 0; f < grid.folds; ++f) jobs.push_back({a, t, R, f});
      }
    }
  }

  SweepResult result;
  result.records.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      result.records[k] = run_cell(jobs[k], grid, options, folds[jobs[k].fold]);
      if (options.on_record) {
        std::lock_guard lock(report);
        options.on_record(result.records[k]);
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, jobs.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  result.canonicalize();
  return result;
}

}  // namespace twolevel::bench
