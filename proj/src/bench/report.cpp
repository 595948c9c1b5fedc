#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "twolevel/bench.hpp"

namespace twolevel::bench {

namespace {

using CellKey = std::tuple<Algorithm, std::size_t, double>;  // (algorithm, R, theta)
using RecordKey = std::tuple<Algorithm, std::size_t, double, std::size_t>;

RecordKey key_of(const SweepRecord& r) { return {r.algorithm, r.R, r.theta, r.fold}; }

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

nlohmann::json to_json(const SweepRecord& record, bool with_time) {
  nlohmann::json j = {{"format", "twolevel.sweep"},
                      {"version", kSweepFormatVersion},
                      {"algorithm", upper(to_string(record.algorithm))},
                      {"theta", record.theta},
                      {"R", record.R},
                      {"fold", record.fold}};
  if (record.ok()) {
    j["train_error"] = record.train_error;
    j["test_error"] = record.test_error;
    j["feature_count"] = record.feature_count;
    j["iterations"] = record.iterations;
    j["error"] = nullptr;
  } else {
    j["train_error"] = nullptr;
    j["test_error"] = nullptr;
    j["feature_count"] = nullptr;
    j["iterations"] = nullptr;
    j["error"] = *record.error;
  }
  if (with_time) j["wall_time"] = record.wall_time;
  return j;
}

SweepRecord sweep_record_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "twolevel.sweep") throw DataError("not a sweep record");
  if (j.value("version", 0) != kSweepFormatVersion) {
    throw DataError("unsupported sweep record version " + j.at("version").dump());
  }
  SweepRecord r;
  r.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  r.theta = j.at("theta").get<double>();
  r.R = j.at("R").get<std::size_t>();
  r.fold = j.at("fold").get<std::size_t>();
  if (j.contains("error") && !j.at("error").is_null()) {
    r.error = j.at("error").get<std::string>();
  } else {
    r.train_error = j.at("train_error").get<double>();
    r.test_error = j.at("test_error").get<double>();
    r.feature_count = j.at("feature_count").get<std::size_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
  }
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  return r;
}

void write_jsonl(const SweepResult& result, std::ostream& out) {
  for (const auto& r : result.records) out << to_json(r).dump() << '\n';
}

void write_timings_jsonl(const SweepResult& result, std::ostream& out) {
  for (const auto& r : result.records) {
    out << nlohmann::json{{"algorithm", upper(to_string(r.algorithm))},
                          {"theta", r.theta},
                          {"R", r.R},
                          {"fold", r.fold},
                          {"wall_time", r.wall_time}}
               .dump()
        << '\n';
  }
}

SweepResult read_jsonl(std::istream& in, std::istream* timings) {
  SweepResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(sweep_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw DataError("sweep results line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (timings) {
    std::map<RecordKey, double> wall;
    while (std::getline(*timings, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line);
      wall[{algorithm_from_string(j.at("algorithm").get<std::string>()), j.at("R").get<std::size_t>(),
            j.at("theta").get<double>(), j.at("fold").get<std::size_t>()}] =
          j.at("wall_time").get<double>();
    }
    for (auto& r : result.records) {
      const auto it = wall.find(key_of(r));
      if (it != wall.end()) r.wall_time = it->second;
    }
  }
  return result;
}

void write_csv(const SweepResult& result, std::ostream& out) {
  out << "algorithm,theta,R,fold,train_error,test_error,feature_count,iterations,wall_time,error\n";
  for (const auto& r : result.records) {
    out << upper(to_string(r.algorithm)) << ',' << number(r.theta) << ',' << r.R << ',' << r.fold
        << ',';
    if (r.ok()) {
      out << number(r.train_error) << ',' << number(r.test_error) << ',' << r.feature_count << ','
          << r.iterations << ',' << number(r.wall_time) << ",\n";
    } else {
      out << ",,,," << number(r.wall_time) << ',' << csv_quote(*r.error) << '\n';
    }
  }
}

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "' (expected train or test)");
}

std::vector<CellSummary> summarize(const SweepResult& result) {
  std::map<CellKey, CellSummary> cells;
  for (const auto& r : result.records) {
    CellSummary& c = cells[{r.algorithm, r.R, r.theta}];
    c.algorithm = r.algorithm;
    c.R = r.R;
    c.theta = r.theta;
    ++c.folds;
    if (!r.ok()) {
      ++c.failed;
      continue;
    }
    c.train_error += r.train_error;
    c.test_error += r.test_error;
    c.feature_count += static_cast<double>(r.feature_count);
  }
  std::vector<CellSummary> out;
  for (auto& [key, c] : cells) {
    const std::size_t good = c.folds - c.failed;
    if (good > 0) {
      c.train_error /= static_cast<double>(good);
      c.test_error /= static_cast<double>(good);
      c.feature_count /= static_cast<double>(good);
    }
    out.push_back(c);
  }
  return out;
}

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "algorithm,theta,R,folds,failed,train_error,test_error,feature_count\n";
  for (const auto& c : cells) {
    out << upper(to_string(c.algorithm)) << ',' << number(c.theta) << ',' << c.R << ',' << c.folds
        << ',' << c.failed << ',' << number(c.train_error) << ',' << number(c.test_error) << ','
        << number(c.feature_count) << '\n';
  }
}

std::vector<MinErrorEntry> min_error_table(const SweepResult& result) {
  std::map<std::pair<Algorithm, std::size_t>, MinErrorEntry> best;
  for (const auto& c : summarize(result)) {
    if (c.failed > 0) continue;
    auto [it, inserted] = best.try_emplace({c.algorithm, c.R});
    MinErrorEntry& e = it->second;
    // Cells arrive in ascending theta, so <= moves ties to the larger theta.
    if (inserted || c.test_error <= e.test_error) {
      e = MinErrorEntry{c.algorithm, c.R, c.theta, c.test_error, c.train_error, c.feature_count, false};
    }
  }
  std::map<Algorithm, double> algo_min;
  for (const auto& [key, e] : best) {
    auto [it, inserted] = algo_min.try_emplace(e.algorithm, e.test_error);
    if (!inserted) it->second = std::min(it->second, e.test_error);
  }
  std::vector<MinErrorEntry> out;
  for (auto& [key, e] : best) {
    e.best = e.test_error == algo_min[e.algorithm];
    out.push_back(e);
  }
  return out;
}

std::string format_min_error_table(const std::vector<MinErrorEntry>& table) {
  std::vector<Algorithm> algos;
  std::vector<std::size_t> Rs;
  for (const auto& e : table) {
    if (std::find(algos.begin(), algos.end(), e.algorithm) == algos.end()) algos.push_back(e.algorithm);
    if (std::find(Rs.begin(), Rs.end(), e.R) == Rs.end()) Rs.push_back(e.R);
  }
  std::sort(algos.begin(), algos.end());
  std::sort(Rs.begin(), Rs.end());
  std::ostringstream os;
  os << "| R |";
  for (Algorithm a : algos) os << ' ' << upper(to_string(a)) << " |";
  os << "\n|---|";
  for (std::size_t k = 0; k < algos.size(); ++k) os << "---|";
  os << '\n';
  for (std::size_t R : Rs) {
    os << "| " << R << " |";
    for (Algorithm a : algos) {
      const auto it = std::find_if(table.begin(), table.end(), [&](const MinErrorEntry& e) {
        return e.algorithm == a && e.R == R;
      });
      if (it == table.end()) {
        os << " - |";
        continue;
      }
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << 100.0 * it->test_error;
      os << ' ' << (it->best ? "**" + cell.str() + "**" : cell.str()) << " |";
    }
    os << '\n';
  }
  return os.str();
}

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.feature_count != b.feature_count ? a.feature_count < b.feature_count : a.error < b.error;
  });
  std::vector<ParetoPoint> front;
  for (const auto& p : points) {
    if (front.empty() || p.error < front.back().error) front.push_back(p);
  }
  return front;
}

std::vector<ParetoPoint> pareto_front(const SweepResult& result, Algorithm algorithm, std::size_t R,
                                      Split split) {
  std::vector<ParetoPoint> points;
  for (const auto& c : summarize(result)) {
    if (c.algorithm != algorithm || c.R != R || c.failed > 0) continue;
    points.push_back({c.feature_count, c.error(split), c.theta});
  }
  return pareto_front(std::move(points));
}

}  // namespace twolevel::bench
