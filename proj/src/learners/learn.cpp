#include "twolevel/learners.hpp"

namespace twolevel {

LearnResult learn(Algorithm algorithm, const BinaryDataset& ds, LearnConfig cfg) {
  cfg.validate();
  BinaryDataset data = cfg.allow_disable && !ds.has_disable_column() ? append_disable_column(ds) : ds;
  if (!cfg.column_costs.empty() && cfg.column_costs.size() + 1 == data.cols() &&
      data.cols() != ds.cols()) {
    cfg.column_costs.insert(cfg.column_costs.begin(), cfg.disable_cost);
  }
  const bool dnf = cfg.form == Form::dnf;
  if (dnf) data = negate(data);

  LearnResult out;
  switch (algorithm) {
    case Algorithm::scs:
    case Algorithm::scn: {
      cfg.binarizer = algorithm == Algorithm::scs ? BinarizerKind::simple : BinarizerKind::redundancy;
      out.rule = learn_set_cover(data, cfg);
      out.iterations = 1;
      break;
    }
    case Algorithm::tlp: {
      out.rule = learn_tlp(data, cfg).rule;
      out.iterations = 1;
      break;
    }
    case Algorithm::bcd: {
      auto res = learn_bcd(data, cfg);
      out.rule = std::move(res.rule);
      out.trace = std::move(res.trace);
      out.iterations = res.iterations;
      break;
    }
    case Algorithm::am: {
      auto res = learn_am(data, cfg);
      out.rule = std::move(res.rule);
      out.trace = std::move(res.trace);
      out.iterations = res.iterations;
      break;
    }
  }
  if (dnf) out.rule = de_morgan(out.rule);
  return out;
}

}  // namespace twolevel
