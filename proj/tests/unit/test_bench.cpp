#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "twolevel/bench.hpp"

using namespace twolevel;
using namespace twolevel::bench;

namespace {

RawDataset synthetic_raw(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  RawDataset raw;
  for (int c = 0; c < 3; ++c) {
    RawColumn col;
    col.name = "x" + std::to_string(c);
    raw.features.push_back(col);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g(rng);
    const double b = g(rng);
    raw.features[0].numeric.push_back(a);
    raw.features[1].numeric.push_back(b);
    raw.features[2].numeric.push_back(g(rng));
    raw.labels.push_back((a > 0.3 && b < 0.5) || (a < -1.0) ? 1 : 0);
  }
  return raw;
}

SweepRecord rec(Algorithm a, std::size_t R, double theta, std::size_t fold, double test,
                double train = 0.0, std::size_t features = 0) {
  SweepRecord r;
  r.algorithm = a;
  r.R = R;
  r.theta = theta;
  r.fold = fold;
  r.test_error = test;
  r.train_error = train;
  r.feature_count = features;
  return r;
}

}  // namespace

TEST_CASE("default theta grid") {
  const auto t = default_thetas();
  REQUIRE(t.size() == 18);
  CHECK(t.front() == 1e-4);
  CHECK(t.back() == 50.0);
  CHECK(std::is_sorted(t.begin(), t.end()));
  CHECK(std::count(t.begin(), t.end(), 0.02) == 1);
}

TEST_CASE("grid validation") {
  SweepGrid g;
  CHECK_NOTHROW(g.validate());
  g.folds = 1;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = {};
  g.thetas = {0.0};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = {};
  g.Rs = {};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("one cell with two folds yields two records") {
  const auto raw = synthetic_raw(1, 60);
  SweepGrid g;
  g.thetas = {0.01};
  g.Rs = {2};
  g.algorithms = {Algorithm::bcd};
  g.folds = 2;
  const auto res = run_sweep(raw, g, {});
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].fold == 0);
  CHECK(res.records[1].fold == 1);
  for (const auto& r : res.records) {
    CHECK(r.ok());
    CHECK(r.test_error >= 0.0);
    CHECK(r.test_error <= 1.0);
  }
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  const auto raw = synthetic_raw(2, 80);
  SweepGrid g;
  g.thetas = {0.001, 0.1};
  g.Rs = {1, 2};
  g.folds = 3;
  g.seed = 7;
  SweepOptions one;
  SweepOptions many;
  many.workers = 3;
  std::size_t callbacks = 0;
  many.on_record = [&](const SweepRecord&) { ++callbacks; };
  const auto a = run_sweep(raw, g, one);
  const auto b = run_sweep(raw, g, many);
  CHECK(a.records.size() == 5 * 2 * 2 * 3);
  CHECK(callbacks == a.records.size());
  std::ostringstream sa;
  std::ostringstream sb;
  write_jsonl(a, sa);
  write_jsonl(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK(cell_seed(7, Algorithm::am, 0, 1, 0) != cell_seed(7, Algorithm::am, 0, 1, 1));
  CHECK(cell_seed(7, Algorithm::am, 0, 1, 0) == cell_seed(7, Algorithm::am, 0, 1, 0));
}

TEST_CASE("learner failures are recorded per record") {
  const auto raw = synthetic_raw(3, 40);
  SweepGrid g;
  g.thetas = {0.01};
  g.Rs = {1};
  g.algorithms = {Algorithm::scs};
  g.folds = 2;
  SweepOptions opt;
  opt.learner.lp_limits.max_iterations = 1;
  const auto res = run_sweep(raw, g, opt);
  REQUIRE(res.records.size() == 2);
  for (const auto& r : res.records) CHECK_FALSE(r.ok());
  CHECK(min_error_table(res).empty());
  CHECK(pareto_front(res, Algorithm::scs, 1, Split::test).empty());
  const auto cells = summarize(res);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].failed == 2);
  std::ostringstream out;
  write_jsonl(res, out);
  CHECK(out.str().find("\"error\":\"") != std::string::npos);
}

TEST_CASE("JSON lines round trip") {
  SweepResult res;
  res.records.push_back(rec(Algorithm::am, 3, 0.002, 4, 0.25, 0.125, 7));
  res.records.back().wall_time = 1.5;
  res.records.back().iterations = 4;
  res.records.push_back(rec(Algorithm::tlp, 1, 50, 0, 0.0));
  res.records.back().error = "boom";
  std::ostringstream out;
  std::ostringstream times;
  write_jsonl(res, out);
  write_timings_jsonl(res, times);
  CHECK(out.str().find("wall_time") == std::string::npos);
  std::istringstream in(out.str());
  std::istringstream tin(times.str());
  const auto back = read_jsonl(in, &tin);
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[0].algorithm == Algorithm::am);
  CHECK(back.records[0].theta == 0.002);
  CHECK(back.records[0].test_error == 0.25);
  CHECK(back.records[0].train_error == 0.125);
  CHECK(back.records[0].feature_count == 7);
  CHECK(back.records[0].iterations == 4);
  CHECK(back.records[0].wall_time == 1.5);
  CHECK(back.records[1].error == std::optional<std::string>("boom"));

  std::istringstream bad("{\"format\": \"other\"}\n");
  CHECK_THROWS_AS(read_jsonl(bad), DataError);
  std::istringstream future("{\"format\": \"twolevel.sweep\", \"version\": 99}\n");
  CHECK_THROWS_AS(read_jsonl(future), DataError);
}

TEST_CASE("minimal-error table matches a direct aggregation") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 30; ++trial) {
    SweepResult res;
    const std::vector<double> thetas{0.001, 0.01, 0.1};
    for (Algorithm a : {Algorithm::scs, Algorithm::am}) {
      for (std::size_t R : {1, 2, 3}) {
        for (double t : thetas) {
          for (std::size_t f = 0; f < 2; ++f) res.records.push_back(rec(a, R, t, f, pick(rng) / 4.0));
        }
      }
    }
    std::shuffle(res.records.begin(), res.records.end(), rng);

    // (algorithm, R) -> best (mean, theta), ties to the larger theta.
    std::map<std::pair<Algorithm, std::size_t>, std::pair<double, double>> expect;
    for (Algorithm a : {Algorithm::scs, Algorithm::am}) {
      for (std::size_t R : {1, 2, 3}) {
        std::pair<double, double> best{2.0, 0.0};
        for (double t : thetas) {
          double sum = 0.0;
          int n = 0;
          for (const auto& r : res.records) {
            if (r.algorithm == a && r.R == R && r.theta == t) {
              sum += r.test_error;
              ++n;
            }
          }
          const double mean = sum / n;
          if (mean < best.first - 1e-12 || std::abs(mean - best.first) <= 1e-12) best = {mean, t};
        }
        expect[{a, R}] = best;
      }
    }
    const auto table = min_error_table(res);
    REQUIRE(table.size() == 6);
    for (const auto& e : table) {
      const auto [mean, theta] = expect.at({e.algorithm, e.R});
      CHECK(e.test_error == doctest::Approx(mean));
      CHECK(e.theta == theta);
      double lowest = 2.0;
      for (std::size_t R : {1, 2, 3}) lowest = std::min(lowest, expect.at({e.algorithm, R}).first);
      CHECK(e.best == (std::abs(e.test_error - lowest) <= 1e-12));
    }
  }
}

TEST_CASE("minimal-error table formatting") {
  SweepResult res;
  res.records.push_back(rec(Algorithm::scs, 1, 0.1, 0, 0.25));
  res.records.push_back(rec(Algorithm::scs, 2, 0.1, 0, 0.125));
  const auto text = format_min_error_table(min_error_table(res));
  CHECK(text.find("25.0") != std::string::npos);
  CHECK(text.find("**12.5**") != std::string::npos);
}

TEST_CASE("Pareto front examples") {
  const std::vector<ParetoPoint> pts{{3, 0.2, 1}, {1, 0.5, 2}, {2, 0.5, 3}, {3, 0.1, 4}, {5, 0.1, 5}};
  const auto front = pareto_front(pts);
  REQUIRE(front.size() == 2);
  CHECK(front[0] == ParetoPoint{1, 0.5, 2});
  CHECK(front[1] == ParetoPoint{3, 0.1, 4});
  CHECK(pareto_front({}).empty());
  const auto dup = pareto_front({{1, 0.1, 1}, {1, 0.1, 2}});
  REQUIRE(dup.size() == 1);
  CHECK(dup[0].theta == 1);
}

TEST_CASE("Pareto front matches the quadratic dominance check") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ParetoPoint> pts;
    std::vector<std::pair<double, double>> raw;
    const std::size_t n = 1 + rng() % 15;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = static_cast<double>(rng() % 6);
      const double e = static_cast<double>(rng() % 6) / 10.0;
      pts.push_back({f, e, static_cast<double>(i)});
      raw.emplace_back(f, e);
    }
    const auto front = pareto_front(pts);
    std::set<std::pair<double, double>> expect;
    for (const auto& [f, e] : raw) {
      if (!oracle::dominated_by_any(f, e, raw)) expect.insert({f, e});
    }
    std::set<std::pair<double, double>> got;
    for (const auto& p : front) got.insert({p.feature_count, p.error});
    CHECK(got == expect);
    CHECK(front.size() == expect.size());
    for (std::size_t k = 1; k < front.size(); ++k) {
      CHECK(front[k].feature_count > front[k - 1].feature_count);
      CHECK(front[k].error < front[k - 1].error);
    }
  }
}

TEST_CASE("Pareto front of a sweep uses fold averages") {
  SweepResult res;
  res.records.push_back(rec(Algorithm::bcd, 2, 0.01, 0, 0.1, 0.0, 6));
  res.records.push_back(rec(Algorithm::bcd, 2, 0.01, 1, 0.3, 0.0, 4));
  res.records.push_back(rec(Algorithm::bcd, 2, 1.0, 0, 0.4, 0.0, 1));
  res.records.push_back(rec(Algorithm::bcd, 2, 1.0, 1, 0.4, 0.0, 1));
  res.records.push_back(rec(Algorithm::bcd, 3, 1.0, 0, 0.0, 0.0, 0));
  const auto front = pareto_front(res, Algorithm::bcd, 2, Split::test);
  REQUIRE(front.size() == 2);
  CHECK(front[0] == ParetoPoint{1.0, 0.4, 1.0});
  CHECK(front[1].feature_count == 5.0);
  CHECK(front[1].error == doctest::Approx(0.2));
  CHECK(split_from_string("train") == Split::train);
  CHECK_THROWS_AS(split_from_string("valid"), std::invalid_argument);
}

TEST_CASE("sweeps reject explicit column costs") {
  SweepGrid g;
  g.folds = 2;
  SweepOptions opt;
  opt.learner.column_costs = {1.0};
  CHECK_THROWS_AS(run_sweep(synthetic_raw(6, 20), g, opt), std::invalid_argument);
}
