#include <algorithm>
#include <cmath>
#include <iostream>

#include "twolevel/data.hpp"

namespace twolevel {

double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FeatureBinarizer FeatureBinarizer::fit(const RawDataset& raw, const BinarizeOptions& options) {
  if (options.quantiles < 1) throw DataError("quantile count must be at least 1");
  if (raw.rows() == 0) throw DataError("cannot binarize an empty dataset");
  raw.validate();

  FeatureBinarizer b;
  b.raw_names_ = raw.feature_names();
  for (std::size_t origin = 0; origin < raw.features.size(); ++origin) {
    const RawColumn& col = raw.features[origin];
    Encoding enc{origin, col.name, col.kind, {}, {}};
    switch (col.kind) {
      case ColumnKind::continuous: {
        std::vector<double> sorted = col.numeric;
        std::sort(sorted.begin(), sorted.end());
        const double max_value = sorted.back();
        for (int q = 1; q <= options.quantiles; ++q) {
          const double t = interpolated_quantile(sorted, static_cast<double>(q) /
                                                             (options.quantiles + 1));
          // A cut at or above the maximum gives a constant column.
          if (t >= max_value) continue;
          if (enc.thresholds.empty() || t > enc.thresholds.back()) enc.thresholds.push_back(t);
        }
        if (enc.thresholds.empty()) {
          b.warnings_.push_back("feature '" + col.name +
                                "' has fewer than 2 distinct values; dropped");
          continue;
        }
        break;
      }
      case ColumnKind::binary: {
        const bool has0 = std::find(col.numeric.begin(), col.numeric.end(), 0.0) != col.numeric.end();
        const bool has1 = std::find(col.numeric.begin(), col.numeric.end(), 1.0) != col.numeric.end();
        if (!(has0 && has1)) {
          b.warnings_.push_back("feature '" + col.name + "' is constant; dropped");
          continue;
        }
        break;
      }
      case ColumnKind::categorical: {
        enc.levels = col.categories;
        std::sort(enc.levels.begin(), enc.levels.end());
        enc.levels.erase(std::unique(enc.levels.begin(), enc.levels.end()), enc.levels.end());
        if (enc.levels.size() < 2) {
          b.warnings_.push_back("feature '" + col.name + "' has a single level; dropped");
          continue;
        }
        break;
      }
    }
    b.encodings_.push_back(std::move(enc));
  }
  b.build_columns();
  return b;
}

void FeatureBinarizer::build_columns() {
  columns_.clear();
  for (const Encoding& enc : encodings_) {
    FeatureMeta base;
    base.origin = enc.origin;
    base.origin_name = enc.name;
    switch (enc.kind) {
      case ColumnKind::continuous:
        for (Direction dir : {Direction::leq, Direction::gt}) {
          for (double t : enc.thresholds) {
            FeatureMeta m = base;
            m.threshold = t;
            m.direction = dir;
            columns_.push_back(m);
          }
        }
        break;
      case ColumnKind::binary: {
        FeatureMeta m = base;
        m.direction = Direction::gt;
        columns_.push_back(m);
        columns_.push_back(m.negated());
        break;
      }
      case ColumnKind::categorical:
        for (const auto& level : enc.levels) {
          FeatureMeta m = base;
          m.level = level;
          m.direction = Direction::gt;
          columns_.push_back(m);
          columns_.push_back(m.negated());
        }
        break;
    }
  }
}

BinaryDataset FeatureBinarizer::transform(const RawDataset& raw) const {
  raw.validate();
  const std::size_t n = raw.rows();
  const std::size_t d = columns_.size();
  const std::size_t words = BinaryDataset::words_for(d);
  std::vector<std::uint64_t> bits(n * words, 0);

  // Locate each encoding's raw column by name so a re-ordered CSV still works.
  std::vector<const RawColumn*> source;
  for (const Encoding& enc : encodings_) {
    const auto it = std::find_if(raw.features.begin(), raw.features.end(),
                                 [&](const RawColumn& c) { return c.name == enc.name; });
    if (it == raw.features.end()) throw DataError("input lacks feature '" + enc.name + "'");
    if (it->kind != enc.kind) {
      throw DataError("feature '" + enc.name + "' is " + to_string(it->kind) + ", expected " +
                      to_string(enc.kind));
    }
    source.push_back(&*it);
  }

  for (std::size_t j = 0; j < d; ++j) {
    const FeatureMeta& m = columns_[j];
    const auto enc_it = std::find_if(encodings_.begin(), encodings_.end(),
                                     [&](const Encoding& e) { return e.origin == m.origin; });
    const RawColumn& col = *source[static_cast<std::size_t>(enc_it - encodings_.begin())];
    for (std::size_t i = 0; i < n; ++i) {
      bool bit = false;
      switch (col.kind) {
        case ColumnKind::continuous:
          bit = col.numeric[i] <= *m.threshold;
          break;
        case ColumnKind::binary:
          bit = col.numeric[i] == 0.0;
          break;
        case ColumnKind::categorical:
          bit = col.categories[i] != *m.level;
          break;
      }
      // `bit` holds the LEQ / negated sense.
      if (m.direction == Direction::gt) bit = !bit;
      if (bit) bits[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
    }
  }
  return BinaryDataset(n, d, std::move(bits), raw.labels, columns_, false);
}

nlohmann::json FeatureBinarizer::to_json() const {
  nlohmann::json encs = nlohmann::json::array();
  for (const Encoding& e : encodings_) {
    encs.push_back({{"origin", e.origin},
                    {"name", e.name},
                    {"kind", to_string(e.kind)},
                    {"thresholds", e.thresholds},
                    {"levels", e.levels}});
  }
  return {{"raw_features", raw_names_}, {"encodings", encs}};
}

FeatureBinarizer FeatureBinarizer::from_json(const nlohmann::json& j) {
  FeatureBinarizer b;
  try {
    b.raw_names_ = j.at("raw_features").get<std::vector<std::string>>();
    for (const auto& e : j.at("encodings")) {
      Encoding enc;
      enc.origin = e.at("origin").get<std::size_t>();
      enc.name = e.at("name").get<std::string>();
      enc.kind = column_kind_from_string(e.at("kind").get<std::string>());
      enc.thresholds = e.at("thresholds").get<std::vector<double>>();
      enc.levels = e.at("levels").get<std::vector<std::string>>();
      b.encodings_.push_back(std::move(enc));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed binarizer: ") + ex.what());
  }
  b.build_columns();
  return b;
}

BinaryDataset binarize(const RawDataset& raw, int quantiles, std::vector<std::string>* warnings) {
  const auto b = FeatureBinarizer::fit(raw, BinarizeOptions{quantiles});
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), b.warnings().begin(), b.warnings().end());
  } else {
    for (const auto& w : b.warnings()) std::cerr << "warning: " << w << '\n';
  }
  return b.transform(raw);
}

}  // namespace twolevel
