#include <algorithm>

#include "twolevel/learners.hpp"

namespace twolevel {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::scs:
      return "scs";
    case Algorithm::scn:
      return "scn";
    case Algorithm::tlp:
      return "tlp";
    case Algorithm::bcd:
      return "bcd";
    case Algorithm::am:
      return "am";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& s) {
  std::string lower = s;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "scs") return Algorithm::scs;
  if (lower == "scn") return Algorithm::scn;
  if (lower == "tlp") return Algorithm::tlp;
  if (lower == "bcd") return Algorithm::bcd;
  if (lower == "am") return Algorithm::am;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected scs, scn, tlp, bcd, am)");
}

void LearnConfig::validate() const {
  if (!(theta >= 0.0)) throw std::invalid_argument("theta must be non-negative");
  if (R < 1) throw std::invalid_argument("clause count R must be at least 1");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (!(simple_threshold > 0.0 && simple_threshold < 1.0)) {
    throw std::invalid_argument("simple binarization threshold must lie in (0, 1)");
  }
}

std::vector<double> LearnConfig::costs_for(const BinaryDataset& ds) const {
  if (column_costs.empty()) return default_column_costs(ds, disable_cost);
  if (column_costs.size() != ds.cols()) {
    throw ShapeError("column_costs has " + std::to_string(column_costs.size()) +
                     " entries for a dataset with " + std::to_string(ds.cols()) + " columns");
  }
  return column_costs;
}

std::vector<double> LearnTrace::accepted_objectives() const {
  std::vector<double> out;
  for (const auto& rec : records) {
    if (rec.accepted) out.push_back(rec.objective);
  }
  return out;
}

}  // namespace twolevel
