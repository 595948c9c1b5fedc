#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/json_config.hpp"
#include "twolevel/bench.hpp"
#include "twolevel/data.hpp"
#include "twolevel/kernels.hpp"
#include "twolevel/learners.hpp"
#include "twolevel/rule.hpp"

namespace fs = std::filesystem;
using namespace twolevel;

namespace {

constexpr int kModelVersion = 1;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "1..5", "2,4" or a mix such as "1..3,5".
std::vector<std::size_t> parse_range_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : split(s, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(std::stoul(part));
      continue;
    }
    const std::size_t lo = std::stoul(part.substr(0, dots));
    const std::size_t hi = std::stoul(part.substr(dots + 2));
    if (lo > hi) throw std::invalid_argument("empty range '" + part + "'");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list '" + s + "'");
  return out;
}

std::vector<double> parse_theta_grid(const std::string& s) {
  if (s == "default") return bench::default_thetas();
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(std::stod(part));
  return out;
}

std::vector<Algorithm> parse_algorithms(const std::string& s) {
  std::vector<Algorithm> out;
  for (const auto& part : split(s, ',')) out.push_back(algorithm_from_string(part));
  return out;
}

Form parse_form(const std::string& s) { return form_from_string(s); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// Options shared by sweep and train.
struct LearnFlags {
  std::string data;
  std::string schema;
  std::string form = "dnf";
  std::string disable = "off";
  double disable_cost = 0.0;
  int quantiles = 9;
  std::size_t max_iters = 100;
  std::size_t max_lp_iters = lp::Limits{}.max_iterations;
  std::string binarizer = "default";
  std::string update_order = "greedy";

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    app->add_option("--schema", schema, "JSON schema naming the label and column kinds")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--form", form, "Rule form")->check(CLI::IsMember({"cnf", "dnf", "CNF", "DNF"}))
        ->capture_default_str();
    app->add_option("--disable-clause", disable, "Pad with an always-true feature so clauses can be disabled")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    app->add_option("--disable-cost", disable_cost, "Sparsity cost of the always-true feature")
        ->capture_default_str();
    app->add_option("--quantiles", quantiles, "Quantile thresholds per continuous feature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--max-iters", max_iters, "Iteration cap for BCD and AM")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--max-lp-iters", max_lp_iters, "Pivot cap per LP solve")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--binarizer", binarizer,
                    "Override rounding of LP solutions for TLP (default: redundancy)")
        ->check(CLI::IsMember({"default", "simple", "redundancy"}))
        ->capture_default_str();
    app->add_option("--update-order", update_order, "Clause order for BCD")
        ->check(CLI::IsMember({"greedy", "cyclic", "random"}))
        ->capture_default_str();
  }

  LearnConfig config() const {
    LearnConfig cfg;
    cfg.form = parse_form(form);
    cfg.allow_disable = disable == "on";
    cfg.disable_cost = disable_cost;
    cfg.max_iters = max_iters;
    cfg.lp_limits.max_iterations = max_lp_iters;
    if (binarizer == "simple") cfg.binarizer = BinarizerKind::simple;
    if (update_order == "cyclic") cfg.update_order = UpdateOrder::cyclic;
    if (update_order == "random") cfg.update_order = UpdateOrder::random;
    return cfg;
  }
};

struct SweepCommand {
  LearnFlags learn;
  std::string algos = "scs,scn,tlp,bcd,am";
  std::string Rs = "1..5";
  std::string theta_grid = "default";
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool global_binarize = false;
  bool progress = false;
  std::string out;

  void add_to(CLI::App* app) {
    learn.add_to(app);
    app->add_option("--algos", algos, "Comma-separated subset of scs,scn,tlp,bcd,am")
        ->capture_default_str();
    app->add_option("--R", Rs, "Clause counts, e.g. 1..5 or 1,3")->capture_default_str();
    app->add_option("--theta-grid", theta_grid, "'default' (18 values) or a comma-separated list")
        ->capture_default_str();
    app->add_option("--folds", folds, "Stratified cross-validation folds")->capture_default_str();
    app->add_option("--seed", seed, "Seed for folds and learners")->capture_default_str();
    app->add_option("--workers", workers, "Worker threads")
        ->envname("TWOLEVEL_WORKERS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--global-binarize", global_binarize,
                  "Fit quantiles on the full dataset instead of each training fold");
    app->add_flag("--progress", progress, "Print one line per finished cell to stderr");
    app->add_option("--out", out, "Output directory")->required();
  }

  int run() const {
    const Schema schema = Schema::load(learn.schema);
    const RawDataset raw = load_csv(learn.data, schema);
    bench::SweepGrid grid;
    grid.algorithms = parse_algorithms(algos);
    grid.Rs = parse_range_list(Rs);
    grid.thetas = parse_theta_grid(theta_grid);
    grid.folds = folds;
    grid.seed = seed;

    bench::SweepOptions opts;
    opts.learner = learn.config();
    opts.form = opts.learner.form;
    opts.quantiles = learn.quantiles;
    opts.global_binarize = global_binarize;
    opts.workers = workers;
    const std::size_t total =
        grid.algorithms.size() * grid.Rs.size() * grid.thetas.size() * grid.folds;
    std::size_t done = 0;
    std::size_t failed = 0;
    opts.on_record = [&](const bench::SweepRecord& r) {
      ++done;
      if (!r.ok()) ++failed;
      if (!progress) return;
      std::cerr << '[' << done << '/' << total << "] " << to_string(r.algorithm) << " R=" << r.R
                << " theta=" << r.theta << " fold=" << r.fold;
      if (r.ok()) {
        std::cerr << " test_error=" << r.test_error << " features=" << r.feature_count;
      } else {
        std::cerr << " error: " << *r.error;
      }
      std::cerr << '\n';
    };

    const bench::SweepResult result = bench::run_sweep(raw, grid, opts);
    fs::create_directories(out);
    std::ofstream results(fs::path(out) / "results.jsonl");
    bench::write_jsonl(result, results);
    std::ofstream timings(fs::path(out) / "timings.jsonl");
    bench::write_timings_jsonl(result, timings);
    std::ofstream csv(fs::path(out) / "results.csv");
    bench::write_csv(result, csv);
    std::ofstream summary(fs::path(out) / "summary.csv");
    bench::write_summary_csv(bench::summarize(result), summary);
    const std::string table = bench::format_min_error_table(bench::min_error_table(result));
    write_file(fs::path(out) / "table.md", table);
    std::cout << table;
    if (failed > 0) std::cerr << failed << " of " << total << " cells failed; see results.jsonl\n";
    return 0;
  }
};

struct TrainCommand {
  LearnFlags learn;
  std::string algo = "am";
  double theta = 1e-3;
  std::size_t R = 2;
  std::uint64_t seed = 0;
  std::string out;

  void add_to(CLI::App* app) {
    learn.add_to(app);
    app->add_option("--algo", algo, "One of scs, scn, tlp, bcd, am")->capture_default_str();
    app->add_option("--theta", theta, "Sparsity weight")->capture_default_str();
    app->add_option("--R", R, "Clause count")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--seed", seed, "Learner seed")->capture_default_str();
    app->add_option("--out", out, "Model file to write")->required();
  }

  int run() const {
    const Algorithm algorithm = algorithm_from_string(algo);
    const Schema schema = Schema::load(learn.schema);
    const RawDataset raw = load_csv(learn.data, schema);
    const FeatureBinarizer binarizer = FeatureBinarizer::fit(raw, BinarizeOptions{learn.quantiles});
    for (const auto& w : binarizer.warnings()) std::cerr << "warning: " << w << '\n';
    BinaryDataset ds = binarizer.transform(raw);

    LearnConfig cfg = learn.config();
    cfg.theta = theta;
    cfg.R = R;
    cfg.seed = seed;
    const LearnResult res = twolevel::learn(algorithm, ds, cfg);
    if (res.rule.disable_column) ds = append_disable_column(ds);

    nlohmann::json model = {{"format", "twolevel.model"},
                            {"version", kModelVersion},
                            {"algorithm", to_string(algorithm)},
                            {"theta", theta},
                            {"R", R},
                            {"label", raw.label_name},
                            {"schema", schema.to_json()},
                            {"binarizer", binarizer.to_json()},
                            {"rule", to_json(res.rule, ds.columns())}};
    write_file(out, model.dump(2) + "\n");
    std::cout << "train error " << std::setprecision(4) << error_rate(ds, res.rule) << ", "
              << res.rule.feature_count() << " features, " << res.iterations << " iterations\n";
    return 0;
  }
};

struct Model {
  TwoLevelRule rule;
  FeatureBinarizer binarizer;
  Schema schema;
  std::string label;
  std::vector<FeatureMeta> meta;
};

Model load_model(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  if (j.value("format", "") != "twolevel.model") throw DataError(path.string() + " is not a model file");
  if (j.value("version", 0) != kModelVersion) {
    throw DataError("unsupported model version " + j.at("version").dump());
  }
  Model m;
  m.rule = rule_from_json(j.at("rule"));
  m.binarizer = FeatureBinarizer::from_json(j.at("binarizer"));
  m.schema = Schema::from_json(j.at("schema"));
  m.label = j.value("label", m.schema.label_column);
  m.meta = m.binarizer.columns();
  if (m.rule.disable_column) {
    FeatureMeta disable;
    disable.is_disable = true;
    disable.origin_name = "always true";
    m.meta.insert(m.meta.begin(), disable);
  }
  if (m.meta.size() != m.rule.d) {
    throw ShapeError("model rule has " + std::to_string(m.rule.d) + " columns, binarizer produces " +
                     std::to_string(m.meta.size()));
  }
  return m;
}

struct PredictCommand {
  std::string model;
  std::string data;
  std::string schema;
  std::string out;

  void add_to(CLI::App* app) {
    app->add_option("--model", model, "Model file written by train")->required()->check(CLI::ExistingFile);
    app->add_option("--data", data, "CSV file to classify")->required()->check(CLI::ExistingFile);
    app->add_option("--schema", schema, "Schema override (default: the training schema)")
        ->check(CLI::ExistingFile);
    app->add_option("--out", out, "Write predictions here instead of stdout");
  }

  int run() const {
    const Model m = load_model(model);
    Schema s = schema.empty() ? m.schema : Schema::load(schema);
    s.label_required = false;
    const RawDataset raw = load_csv(data, s);
    BinaryDataset ds = m.binarizer.transform(raw);
    if (m.rule.disable_column) ds = append_disable_column(ds);
    if (ds.cols() != m.rule.d) {
      throw ShapeError("data has " + std::to_string(ds.cols()) + " binary columns, rule expects " +
                       std::to_string(m.rule.d));
    }
    const auto pred = predict_all(ds, m.rule);
    std::ofstream file;
    if (!out.empty()) {
      file.open(out);
      if (!file) throw DataError("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "row,prediction\n";
    for (std::size_t i = 0; i < pred.size(); ++i) os << i + 1 << ',' << int(pred[i]) << '\n';
    if (raw.labeled) std::cerr << "error rate " << error_rate(ds, m.rule) << '\n';
    return 0;
  }
};

struct ExplainCommand {
  std::string model;

  void add_to(CLI::App* app) {
    app->add_option("--model", model, "Model file written by train")->required()->check(CLI::ExistingFile);
  }

  int run() const {
    const Model m = load_model(model);
    std::cout << explain(m.rule, m.meta, m.label);
    return 0;
  }
};

bench::SweepResult load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return bench::read_jsonl(in);
}

struct TableCommand {
  std::string results;
  bool json = false;

  void add_to(CLI::App* app) {
    app->add_option("--results", results, "results.jsonl from sweep")->required()->check(CLI::ExistingFile);
    app->add_flag("--json", json, "Emit JSON instead of a markdown table");
  }

  int run() const {
    const auto table = bench::min_error_table(load_results(results));
    if (!json) {
      std::cout << bench::format_min_error_table(table);
      return 0;
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : table) {
      arr.push_back({{"algorithm", to_string(e.algorithm)},
                     {"R", e.R},
                     {"theta", e.theta},
                     {"test_error", e.test_error},
                     {"train_error", e.train_error},
                     {"feature_count", e.feature_count},
                     {"best", e.best}});
    }
    std::cout << arr.dump(2) << '\n';
    return 0;
  }
};

struct ParetoCommand {
  std::string results;
  std::string algo = "am";
  std::string Rs = "1..5";
  std::string split = "test";

  void add_to(CLI::App* app) {
    app->add_option("--results", results, "results.jsonl from sweep")->required()->check(CLI::ExistingFile);
    app->add_option("--algo", algo, "Algorithm")->capture_default_str();
    app->add_option("--R", Rs, "Clause counts, one front each")->capture_default_str();
    app->add_option("--split", split, "Error to plot")->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
  }

  int run() const {
    const auto res = load_results(results);
    const Algorithm a = algorithm_from_string(algo);
    const bench::Split sp = bench::split_from_string(split);
    std::cout << "algorithm,R,split,feature_count,error,theta\n";
    for (std::size_t R : parse_range_list(Rs)) {
      for (const auto& p : bench::pareto_front(res, a, R, sp)) {
        std::cout << to_string(a) << ',' << R << ',' << split << ',' << std::setprecision(10)
                  << p.feature_count << ',' << p.error << ',' << p.theta << '\n';
      }
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn sparse two-level Boolean rules (CNF/DNF) and benchmark them."};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<cli::JsonConfig>(&app));
  app.set_config("--config", "", "JSON file whose keys mirror the long flags");
  bool show_isa = false;
  app.add_flag("--isa", show_isa, "Print the active SIMD kernel set to stderr");

  SweepCommand sweep;
  TrainCommand train;
  PredictCommand predict;
  ExplainCommand explain_cmd;
  TableCommand table;
  ParetoCommand pareto;

  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    cmd.add_to(sub);
    return sub;
  };
  CLI::App* sweep_app = add("sweep", "Cross-validated theta/R sweep", sweep);
  CLI::App* train_app = add("train", "Fit one configuration and save the model", train);
  CLI::App* predict_app = add("predict", "Apply a saved model to a CSV", predict);
  CLI::App* explain_app = add("explain", "Print a saved rule as IF/THEN text", explain_cmd);
  CLI::App* table_app = add("table", "Minimal average test error per algorithm and R", table);
  CLI::App* pareto_app = add("pareto", "Feature-count/error Pareto fronts as CSV", pareto);

  CLI11_PARSE(app, argc, argv);
  if (show_isa) std::cerr << "kernels: " << kernels::isa_name(kernels::active().isa) << '\n';
  try {
    if (*sweep_app) return sweep.run();
    if (*train_app) return train.run();
    if (*predict_app) return predict.run();
    if (*explain_app) return explain_cmd.run();
    if (*table_app) return table.run();
    if (*pareto_app) return pareto.run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
