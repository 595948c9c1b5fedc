#include <algorithm>
#include <bit>
#include <sstream>

#include "twolevel/kernels.hpp"
#include "twolevel/rule.hpp"

namespace twolevel {

std::string to_string(Form form) { return form == Form::cnf ? "CNF" : "DNF"; }

Form form_from_string(const std::string& s) {
  if (s == "CNF" || s == "cnf") return Form::cnf;
  if (s == "DNF" || s == "dnf") return Form::dnf;
  throw std::invalid_argument("unknown rule form '" + s + "'");
}

Clause Clause::from_indices(std::size_t d, std::span<const std::size_t> selected) {
  Clause c(d);
  for (std::size_t j : selected) c.set(j);
  return c;
}

void Clause::set(std::size_t j, bool on) {
  if (j >= d_) throw std::out_of_range("clause feature index out of range");
  const std::uint64_t bit = std::uint64_t{1} << (j % 64);
  if (on) {
    bits_[j / 64] |= bit;
  } else {
    bits_[j / 64] &= ~bit;
  }
}

std::size_t Clause::count() const {
  std::size_t c = 0;
  for (std::uint64_t word : bits_) c += static_cast<std::size_t>(std::popcount(word));
  return c;
}

std::vector<std::size_t> Clause::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    std::uint64_t word = bits_[k];
    while (word != 0) {
      out.push_back(k * 64 + static_cast<std::size_t>(std::countr_zero(word)));
      word &= word - 1;
    }
  }
  return out;
}

TwoLevelRule::TwoLevelRule(Form f, std::size_t arity, std::size_t clause_count, bool has_disable)
    : form(f), d(arity), disable_column(has_disable), clauses(clause_count, Clause(arity)) {}

std::size_t TwoLevelRule::feature_count() const {
  std::size_t total = 0;
  for (const Clause& c : clauses) {
    total += c.count();
    if (disable_column && c.selected(0)) --total;
  }
  return total;
}

WeightMatrix WeightMatrix::from_rule(const TwoLevelRule& rule) {
  WeightMatrix w(rule.d, rule.size());
  for (std::size_t r = 0; r < rule.size(); ++r) {
    for (std::size_t j : rule.clauses[r].indices()) w.at(j, r) = 1.0;
  }
  return w;
}

std::vector<double> default_column_costs(const BinaryDataset& ds, double disable_cost) {
  std::vector<double> costs(ds.cols(), 1.0);
  if (ds.has_disable_column()) costs[0] = disable_cost;
  return costs;
}

bool IdealOutputs::consistent_with(std::span<const std::uint8_t> labels) const {
  if (labels.size() != n_) return false;
  for (std::size_t i = 0; i < n_; ++i) {
    bool any_zero = false;
    bool all_one = true;
    for (std::size_t r = 0; r < r_; ++r) {
      any_zero = any_zero || at(i, r) == Ideal::zero;
      all_one = all_one && at(i, r) == Ideal::one;
    }
    if (labels[i] == 1 ? !all_one : !any_zero) return false;
  }
  return true;
}

namespace {

void check_arity(const BinaryDataset& ds, const TwoLevelRule& rule) {
  if (rule.d != ds.cols()) {
    throw ShapeError("rule arity " + std::to_string(rule.d) + " does not match dataset arity " +
                     std::to_string(ds.cols()));
  }
  if (rule.disable_column && !ds.has_disable_column()) {
    throw ShapeError("rule expects a disable column the dataset does not have");
  }
  for (const Clause& c : rule.clauses) {
    if (c.arity() != rule.d) throw ShapeError("clause arity differs from rule arity");
  }
}

void check_costs(const BinaryDataset& ds, std::span<const double> costs) {
  if (costs.size() != ds.cols()) throw ShapeError("column cost vector has wrong length");
}

// s_ir = sum_j a_ij w_jr for binary clauses, as counts.
std::vector<std::uint32_t> clause_counts(const BinaryDataset& ds, const TwoLevelRule& rule) {
  const auto& k = kernels::active();
  const std::size_t n = ds.rows();
  const std::size_t R = rule.size();
  std::vector<std::uint32_t> out(n * R);
  std::vector<std::uint32_t> column(n);
  for (std::size_t r = 0; r < R; ++r) {
    kernels::row_counts(k, ds.data(), n, ds.words(), rule.clauses[r].data(), column.data());
    for (std::size_t i = 0; i < n; ++i) out[i * R + r] = column[i];
  }
  return out;
}

std::vector<double> clause_sums(const BinaryDataset& ds, const WeightMatrix& w) {
  const auto& k = kernels::active();
  const std::size_t n = ds.rows();
  const std::size_t R = w.clauses();
  std::vector<double> out(n * R);
  std::vector<double> column(n);
  for (std::size_t r = 0; r < R; ++r) {
    kernels::row_sums(k, ds.data(), n, ds.words(), ds.cols(), w.clause(r).data(), column.data());
    for (std::size_t i = 0; i < n; ++i) out[i * R + r] = column[i];
  }
  return out;
}

CostReport make_report(double accuracy, double sparsity) {
  return {accuracy, sparsity, accuracy + sparsity};
}

double hamming_accuracy(const BinaryDataset& ds, std::span<const double> sums, std::size_t R) {
  double total = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const double* s = sums.data() + i * R;
    if (ds.label(i) == 1) {
      for (std::size_t r = 0; r < R; ++r) total += std::max(0.0, 1.0 - s[r]);
    } else {
      total += R == 0 ? 0.0 : *std::min_element(s, s + R);
    }
  }
  return total;
}

}  // namespace

bool eval_clause(const BinaryDataset& ds, const Clause& clause, std::size_t i) {
  if (clause.arity() != ds.cols()) throw ShapeError("clause arity does not match dataset");
  return kernels::active().and_popcount(ds.row(i), clause.data(), ds.words()) > 0;
}

bool eval_term(const BinaryDataset& ds, const Clause& clause, std::size_t i) {
  if (clause.arity() != ds.cols()) throw ShapeError("clause arity does not match dataset");
  if (ds.has_disable_column() && clause.selected(0)) return false;
  const std::size_t selected = clause.count();
  return kernels::active().and_popcount(ds.row(i), clause.data(), ds.words()) == selected;
}

bool predict(const BinaryDataset& ds, const TwoLevelRule& rule, std::size_t i) {
  check_arity(ds, rule);
  if (rule.form == Form::cnf) {
    return std::all_of(rule.clauses.begin(), rule.clauses.end(),
                       [&](const Clause& c) { return eval_clause(ds, c, i); });
  }
  return std::any_of(rule.clauses.begin(), rule.clauses.end(),
                     [&](const Clause& c) { return eval_term(ds, c, i); });
}

std::vector<std::uint8_t> predict_all(const BinaryDataset& ds, const TwoLevelRule& rule) {
  check_arity(ds, rule);
  const std::size_t n = ds.rows();
  const std::size_t R = rule.size();
  const auto counts = clause_counts(ds, rule);
  std::vector<std::size_t> selected(R);
  std::vector<bool> disabled_term(R, false);
  for (std::size_t r = 0; r < R; ++r) {
    selected[r] = rule.clauses[r].count();
    disabled_term[r] = ds.has_disable_column() && rule.clauses[r].selected(0);
  }
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool value = rule.form == Form::cnf;
    for (std::size_t r = 0; r < R; ++r) {
      const std::uint32_t c = counts[i * R + r];
      if (rule.form == Form::cnf) {
        value = value && c > 0;
      } else {
        value = value || (!disabled_term[r] && c == selected[r]);
      }
    }
    out[i] = value ? 1 : 0;
  }
  return out;
}

TwoLevelRule de_morgan(const TwoLevelRule& rule, std::optional<std::span<const FeatureMeta>> meta) {
  if (meta) {
    if (meta->size() != rule.d) throw ShapeError("metadata arity does not match rule arity");
    const auto partner = complement_columns(*meta);
    for (const Clause& c : rule.clauses) {
      for (std::size_t j : c.indices()) {
        if ((*meta)[j].is_disable) continue;
        if (!partner[j]) {
          throw ShapeError("column " + std::to_string(j) + " (" + (*meta)[j].display_name() +
                           ") has no negation column");
        }
      }
    }
  }
  TwoLevelRule dual = rule;
  dual.form = rule.form == Form::cnf ? Form::dnf : Form::cnf;
  return dual;
}

TwoLevelRule complement_literals(const TwoLevelRule& rule,
                                 std::span<const std::optional<std::size_t>> complement) {
  if (complement.size() != rule.d) throw ShapeError("complement map arity mismatch");
  TwoLevelRule out = rule;
  for (std::size_t r = 0; r < rule.size(); ++r) {
    Clause c(rule.d);
    for (std::size_t j : rule.clauses[r].indices()) {
      if (rule.disable_column && j == 0) {
        c.set(0);
        continue;
      }
      if (!complement[j]) {
        throw ShapeError("column " + std::to_string(j) + " has no complement column");
      }
      c.set(*complement[j]);
    }
    out.clauses[r] = c;
  }
  return out;
}

double sparsity_cost(const WeightMatrix& w, double theta, std::span<const double> column_costs) {
  double total = 0.0;
  for (std::size_t r = 0; r < w.clauses(); ++r) {
    const auto col = w.clause(r);
    for (std::size_t j = 0; j < w.arity(); ++j) total += column_costs[j] * col[j];
  }
  return theta * total;
}

CostReport zero_one_cost(const BinaryDataset& ds, const TwoLevelRule& rule, double theta,
                         std::span<const double> column_costs) {
  check_arity(ds, rule);
  check_costs(ds, column_costs);
  const auto yhat = predict_all(ds, rule);
  double errors = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) errors += yhat[i] != ds.label(i) ? 1.0 : 0.0;
  return make_report(errors, sparsity_cost(WeightMatrix::from_rule(rule), theta, column_costs));
}

std::vector<double> hamming_distances(const BinaryDataset& ds, const TwoLevelRule& rule) {
  check_arity(ds, rule);
  if (rule.form != Form::cnf) throw ShapeError("hamming cost is defined for CNF rules");
  const std::size_t R = rule.size();
  const auto counts = clause_counts(ds, rule);
  std::vector<double> eta(ds.rows(), 0.0);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const std::uint32_t* s = counts.data() + i * R;
    if (ds.label(i) == 1) {
      eta[i] = static_cast<double>(std::count(s, s + R, 0U));
    } else {
      eta[i] = R == 0 ? 0.0 : static_cast<double>(*std::min_element(s, s + R));
    }
  }
  return eta;
}

CostReport hamming_cost(const BinaryDataset& ds, const TwoLevelRule& rule, double theta,
                        std::span<const double> column_costs) {
  check_costs(ds, column_costs);
  const auto eta = hamming_distances(ds, rule);
  double accuracy = 0.0;
  for (double e : eta) accuracy += e;
  return make_report(accuracy, sparsity_cost(WeightMatrix::from_rule(rule), theta, column_costs));
}

CostReport hamming_cost(const BinaryDataset& ds, const WeightMatrix& w, double theta,
                        std::span<const double> column_costs) {
  if (w.arity() != ds.cols()) throw ShapeError("weight arity does not match dataset");
  check_costs(ds, column_costs);
  const auto sums = clause_sums(ds, w);
  return make_report(hamming_accuracy(ds, sums, w.clauses()),
                     sparsity_cost(w, theta, column_costs));
}

CostReport joint_cost(const BinaryDataset& ds, const TwoLevelRule& rule, const IdealOutputs& v,
                      double theta, std::span<const double> column_costs) {
  check_arity(ds, rule);
  check_costs(ds, column_costs);
  if (v.rows() != ds.rows() || v.clauses() != rule.size()) {
    throw ShapeError("ideal output matrix shape does not match dataset and rule");
  }
  if (!v.consistent_with(ds.labels())) {
    throw std::invalid_argument("ideal outputs are inconsistent with the labels");
  }
  const std::size_t R = rule.size();
  const auto counts = clause_counts(ds, rule);
  double accuracy = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t r = 0; r < R; ++r) {
      const double s = counts[i * R + r];
      switch (v.at(i, r)) {
        case Ideal::one:
          accuracy += std::max(0.0, 1.0 - s);
          break;
        case Ideal::zero:
          accuracy += s;
          break;
        case Ideal::dont_care:
          break;
      }
    }
  }
  return make_report(accuracy, sparsity_cost(WeightMatrix::from_rule(rule), theta, column_costs));
}

CostReport interpolated_zero_one_cost(const BinaryDataset& ds, const WeightMatrix& w,
                                      double theta, std::span<const double> column_costs) {
  if (w.arity() != ds.cols()) throw ShapeError("weight arity does not match dataset");
  check_costs(ds, column_costs);
  const auto& k = kernels::active();
  const std::size_t R = w.clauses();
  const auto sums = clause_sums(ds, w);
  double accuracy = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.label(i) == 1) {
      double worst = 0.0;
      for (std::size_t r = 0; r < R; ++r) worst = std::max(worst, 1.0 - sums[i * R + r]);
      accuracy += worst;
    } else {
      double beta_sum = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        beta_sum += k.masked_max(ds.row(i), w.clause(r).data(), ds.cols());
      }
      accuracy += std::max(0.0, beta_sum - static_cast<double>(R) + 1.0);
    }
  }
  return make_report(accuracy, sparsity_cost(w, theta, column_costs));
}

double error_rate(const BinaryDataset& ds, const TwoLevelRule& rule) {
  if (ds.rows() == 0) throw std::invalid_argument("error rate of an empty dataset");
  const auto yhat = predict_all(ds, rule);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) errors += yhat[i] != ds.label(i) ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(ds.rows());
}

nlohmann::json to_json(const TwoLevelRule& rule, std::span<const FeatureMeta> meta) {
  if (!meta.empty() && meta.size() != rule.d) throw ShapeError("metadata arity mismatch");
  nlohmann::json clauses = nlohmann::json::array();
  for (const Clause& c : rule.clauses) {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t j : c.indices()) {
      nlohmann::json f{{"index", j}};
      if (!meta.empty()) f["name"] = meta[j].display_name();
      features.push_back(std::move(f));
    }
    clauses.push_back({{"features", features}});
  }
  return {{"format", "twolevel.rule"},
          {"version", 1},
          {"form", to_string(rule.form)},
          {"d", rule.d},
          {"R", rule.size()},
          {"disable_column", rule.disable_column},
          {"clauses", clauses}};
}

TwoLevelRule rule_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "twolevel.rule") {
      throw std::invalid_argument("not a serialized rule");
    }
    if (j.at("version").get<int>() != 1) throw std::invalid_argument("unsupported rule version");
    TwoLevelRule rule(form_from_string(j.at("form").get<std::string>()), j.at("d").get<std::size_t>(),
                      0, j.value("disable_column", false));
    for (const auto& c : j.at("clauses")) {
      Clause clause(rule.d);
      for (const auto& f : c.at("features")) clause.set(f.at("index").get<std::size_t>());
      rule.clauses.push_back(clause);
    }
    if (j.contains("R") && j.at("R").get<std::size_t>() != rule.size()) {
      throw std::invalid_argument("clause count does not match R");
    }
    return rule;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed rule: ") + e.what());
  }
}

std::string explain(const TwoLevelRule& rule, std::span<const FeatureMeta> meta,
                    const std::string& label_name) {
  if (meta.size() != rule.d) throw ShapeError("metadata arity mismatch");
  const bool dnf = rule.form == Form::dnf;
  const std::string inner = dnf ? "AND" : "OR";
  const std::string outer = dnf ? "OR" : "AND";
  std::ostringstream os;
  const std::string indent = "      ";
  for (std::size_t r = 0; r < rule.size(); ++r) {
    std::vector<std::string> literals;
    const auto idx = rule.clauses[r].indices();
    const bool disabled = rule.disable_column && rule.clauses[r].selected(0);
    if (disabled) {
      literals.push_back(dnf ? "FALSE (disabled)" : "TRUE (disabled)");
    } else if (idx.empty()) {
      literals.push_back(dnf ? "TRUE" : "FALSE");
    } else {
      for (std::size_t j : idx) literals.push_back(meta[j].display_name());
    }
    const std::string number = std::to_string(r + 1) + ". ";
    for (std::size_t k = 0; k < literals.size(); ++k) {
      os << (r == 0 && k == 0 ? "IF    " : indent);
      os << (k == 0 ? number : std::string(number.size(), ' ')) << literals[k] << ';';
      if (k + 1 < literals.size()) {
        os << ' ' << inner;
      } else if (r + 1 < rule.size()) {
        os << ' ' << outer;
      }
      os << '\n';
    }
  }
  if (rule.size() == 0) os << "IF    " << (dnf ? "FALSE" : "TRUE") << ";\n";
  os << "THEN  " << label_name << " = TRUE.\n";
  return os.str();
}

}  // namespace twolevel
