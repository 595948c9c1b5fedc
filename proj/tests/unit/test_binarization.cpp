#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "support/binarization_oracle.hpp"
#include "support/oracles.hpp"
#include "twolevel/binarization.hpp"

using namespace twolevel;
using oracle::admissible_subsets;

namespace {

RawDataset random_raw(std::mt19937_64& rng, std::size_t n, std::size_t continuous, bool with_binary) {
  RawDataset raw;
  for (std::size_t f = 0; f < continuous; ++f) {
    RawColumn col{"c" + std::to_string(f), ColumnKind::continuous, {}, {}};
    for (std::size_t i = 0; i < n; ++i) col.numeric.push_back(std::uniform_real_distribution<double>(0, 1)(rng));
    raw.features.push_back(col);
  }
  if (with_binary) {
    RawColumn col{"b", ColumnKind::binary, {}, {}};
    for (std::size_t i = 0; i < n; ++i) col.numeric.push_back(static_cast<double>(rng() & 1U));
    col.numeric[0] = 0;
    col.numeric[1] = 1;
    raw.features.push_back(col);
  }
  for (std::size_t i = 0; i < n; ++i) raw.labels.push_back(rng() & 1U);
  return raw;
}

}  // namespace

TEST_CASE("simple binarization thresholds inclusively") {
  WeightMatrix w(3, 1);
  w.at(0, 0) = 0.2;
  w.at(1, 0) = 0.19;
  w.at(2, 0) = 0.9;
  const auto rule = simple_binarize(w, 0.2);
  CHECK(rule.clauses[0].indices() == std::vector<std::size_t>{0, 2});
  CHECK(rule.form == Form::cnf);
  CHECK_THROWS_AS(simple_binarize(w, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(simple_binarize(w, 1.0), std::invalid_argument);
}

TEST_CASE("columns are grouped by source feature") {
  std::mt19937_64 rng(20);
  RawDataset raw = random_raw(rng, 30, 2, true);
  RawColumn cat{"color", ColumnKind::categorical, {}, {}};
  for (std::size_t i = 0; i < 30; ++i) cat.categories.push_back(i % 3 == 0 ? "red" : i % 3 == 1 ? "green" : "blue");
  raw.features.push_back(cat);
  const auto ds = append_disable_column(binarize(raw, 3));
  const auto idx = build_redundancy_index(ds, IndexMode::verify_data);

  CHECK(idx.groups.front().is_disable);
  CHECK(idx.group_of.size() == ds.cols());
  std::set<std::size_t> covered;
  for (std::size_t g = 0; g < idx.groups.size(); ++g) {
    for (std::size_t j : idx.groups[g].columns()) {
      CHECK(idx.group_of[j] == g);
      CHECK(covered.insert(j).second);
    }
  }
  CHECK(covered.size() == ds.cols());
  // Two continuous sources, one binary, three categorical levels, disable.
  CHECK(idx.groups.size() == 7);
  for (const auto& g : idx.groups) {
    for (std::size_t k = 1; k < g.entries.size(); ++k) {
      CHECK(*g.entries[k - 1].threshold < *g.entries[k].threshold);
    }
  }
}

TEST_CASE("data verification rejects broken nesting") {
  std::vector<FeatureMeta> meta(4);
  for (int k = 0; k < 2; ++k) {
    meta[2 * k].origin = 0;
    meta[2 * k].threshold = k;
    meta[2 * k].direction = Direction::leq;
    meta[2 * k + 1] = meta[2 * k].negated();
  }
  // Column 2 (c <= 1) must contain column 0 (c <= 0); row 0 breaks that.
  const auto ds = BinaryDataset::from_dense({{1, 0, 0, 1}, {0, 1, 1, 0}}, {1, 0}, meta);
  CHECK_NOTHROW(build_redundancy_index(ds, IndexMode::trust_metadata));
  CHECK_THROWS_AS(build_redundancy_index(ds, IndexMode::verify_data), DataError);
}

TEST_CASE("candidate lists equal the brute-force admissible subsets") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto ds = binarize(random_raw(rng, 40, 1 + rng() % 2, trial % 2 == 0), 1 + static_cast<int>(rng() % 4));
    for (Regime regime : {Regime::no_disable, Regime::disable}) {
      const auto idx = build_redundancy_index(ds.columns());
      for (std::size_t g = 0; g < idx.groups.size(); ++g) {
        std::set<std::vector<std::size_t>> got;
        for (const auto& c : enumerate_candidates(idx, g, regime)) {
          CHECK(std::is_sorted(c.columns.begin(), c.columns.end()));
          CHECK(got.insert(c.columns).second);
        }
        const auto expect = admissible_subsets(idx.groups[g].columns(), ds.columns(), regime);
        CHECK(got == std::set<std::vector<std::size_t>>(expect.begin(), expect.end()));
      }
    }
  }
}

TEST_CASE("structural violations are reported") {
  std::vector<FeatureMeta> meta;
  for (double t : {1.0, 2.0}) {
    FeatureMeta m;
    m.threshold = t;
    m.direction = Direction::leq;
    m.origin_name = "c";
    meta.push_back(m);
  }
  for (double t : {1.0, 2.0}) {
    FeatureMeta m;
    m.threshold = t;
    m.direction = Direction::gt;
    m.origin_name = "c";
    meta.push_back(m);
  }
  const auto idx = build_redundancy_index(meta);
  auto clause = [](std::vector<std::size_t> cols) { return Clause::from_indices(4, cols); };
  CHECK(redundancy_violation(idx, clause({0, 1}), Regime::no_disable).has_value());  // two LEQ
  CHECK(redundancy_violation(idx, clause({2, 3}), Regime::no_disable).has_value());  // two GT
  CHECK_FALSE(redundancy_violation(idx, clause({1, 2}), Regime::no_disable).has_value());
  CHECK(redundancy_violation(idx, clause({1, 2}), Regime::disable).has_value());  // zigzag
  CHECK(redundancy_violation(idx, clause({0, 2}), Regime::disable).has_value());  // complement
  CHECK_FALSE(redundancy_violation(idx, clause({0, 3}), Regime::disable).has_value());
}

TEST_CASE("integral input is returned unchanged") {
  std::mt19937_64 rng(22);
  const auto ds = binarize(random_raw(rng, 30, 2, true), 3);
  const auto rule = oracle::random_rule(rng, ds.cols(), 2, Form::cnf, 0.5);
  const auto costs = default_column_costs(ds);
  std::vector<BinarizeStep> trace;
  const auto out = redundancy_binarize(WeightMatrix::from_rule(rule), ds, 0.1, costs, {}, nullptr, &trace);
  CHECK(out == rule);
  CHECK(trace.empty());
}

TEST_CASE("each sweep step picks the brute-force optimum at its evaluation point") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    BinaryDataset ds = binarize(random_raw(rng, 25, 1 + rng() % 2, trial % 3 == 0), 1 + static_cast<int>(rng() % 2));
    if (trial % 4 == 1) ds = append_disable_column(ds);
    const std::size_t d = ds.cols();
    const std::size_t R = 1 + rng() % 2;
    WeightMatrix frac(d, R);
    for (std::size_t r = 0; r < R; ++r) {
      for (auto& v : frac.clause(r)) v = rng() % 3 == 0 ? 0.0 : unit(rng);
    }
    const auto costs = default_column_costs(ds, 0.5);
    const double theta = trial % 2 ? 0.05 : 0.5;
    RedundancyOptions opts;
    opts.objective = trial % 2 ? BinarizeObjective::zero_one : BinarizeObjective::hamming;
    opts.order = trial % 5 == 0 ? GroupOrder::summed : GroupOrder::per_clause;
    const Regime regime = ds.has_disable_column() ? Regime::disable : Regime::no_disable;
    std::vector<BinarizeStep> trace;
    const auto rule = redundancy_binarize(frac, ds, theta, costs, opts, nullptr, &trace);
    const auto idx = build_redundancy_index(ds.columns());
    CHECK(trace.size() == R * idx.groups.size());

    const auto a = oracle::dense(ds);
    const std::vector<std::uint8_t> y(ds.labels().begin(), ds.labels().end());
    for (const auto& step : trace) {
      const auto members = idx.groups[step.group].columns();
      double best = std::numeric_limits<double>::infinity();
      std::vector<std::vector<std::size_t>> argmin;
      for (const auto& subset : admissible_subsets(members, ds.columns(), regime)) {
        auto w = oracle::weights(step.evaluation_point);
        for (std::size_t j : members) w[step.clause][j] = 0.0;
        for (std::size_t j : subset) w[step.clause][j] = 1.0;
        const double c = opts.objective == BinarizeObjective::hamming
                             ? oracle::hamming_objective(a, y, w, theta, costs)
                             : oracle::interpolated_objective(a, y, w, theta, costs);
        if (c < best - 1e-9) {
          best = c;
          argmin = {subset};
        } else if (c <= best + 1e-9) {
          argmin.push_back(subset);
        }
      }
      CHECK(step.cost == doctest::Approx(best).epsilon(1e-9));
      CHECK(std::find(argmin.begin(), argmin.end(), step.chosen.columns) != argmin.end());
      // Fewest columns among the tied optima.
      std::size_t fewest = members.size();
      for (const auto& s : argmin) fewest = std::min(fewest, s.size());
      CHECK(step.chosen.columns.size() == fewest);
    }
    for (const auto& clause : rule.clauses) {
      CHECK_FALSE(redundancy_violation(idx, clause, regime).has_value());
    }
  }
}

TEST_CASE("groups are visited by decreasing fractional mass") {
  std::mt19937_64 rng(24);
  const auto ds = binarize(random_raw(rng, 20, 3, false), 2);
  const auto idx = build_redundancy_index(ds.columns());
  WeightMatrix frac(ds.cols(), 1);
  for (auto& v : frac.clause(0)) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::vector<BinarizeStep> trace;
  redundancy_binarize(frac, ds, 0.1, default_column_costs(ds), {}, &idx, &trace);
  std::vector<double> masses;
  for (const auto& step : trace) {
    double m = 0.0;
    for (std::size_t j : idx.groups[step.group].columns()) m += frac.at(j, 0);
    masses.push_back(m);
  }
  CHECK(std::is_sorted(masses.rbegin(), masses.rend()));
}

TEST_CASE("threshold-half placeholder rounds unvisited groups first") {
  std::mt19937_64 rng(25);
  const auto ds = binarize(random_raw(rng, 20, 2, false), 2);
  WeightMatrix frac(ds.cols(), 1);
  for (auto& v : frac.clause(0)) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  RedundancyOptions opts;
  opts.placeholder = Placeholder::threshold_half;
  std::vector<BinarizeStep> trace;
  redundancy_binarize(frac, ds, 0.1, default_column_costs(ds), opts, nullptr, &trace);
  REQUIRE_FALSE(trace.empty());
  for (double v : trace.front().evaluation_point.values()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("shape errors") {
  const auto ds = BinaryDataset::from_dense({{1, 0}}, {1});
  WeightMatrix frac(3, 1, 0.5);
  CHECK_THROWS_AS(redundancy_binarize(frac, ds, 0.1, std::vector<double>{1, 1, 1}), ShapeError);
  WeightMatrix ok(2, 1, 0.5);
  CHECK_THROWS_AS(redundancy_binarize(ok, ds, 0.1, std::vector<double>{1}), ShapeError);
  CHECK(is_integral(WeightMatrix(2, 1, 1.0)));
  CHECK_FALSE(is_integral(ok));
}
