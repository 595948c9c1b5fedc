#pragma once

// Tabular input, feature binarization and cross-validation folds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace twolevel {

/// Thrown for malformed input files and schema violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Raw data

enum class ColumnKind { continuous, categorical, binary };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<double> numeric;           // continuous and binary columns
  std::vector<std::string> categories;   // categorical columns
};

struct RawDataset {
  std::vector<RawColumn> features;
  std::vector<std::uint8_t> labels;
  std::string label_name = "label";
  bool labeled = true;  // false when parsed without a label column (labels all 0)

  std::size_t rows() const { return labels.size(); }
  std::size_t arity() const { return features.size(); }
  std::vector<std::string> feature_names() const;

  /// Rows in the given order.
  RawDataset subset(std::span<const std::size_t> rows) const;

  /// Throws DataError if a column length differs from the label count or a
  /// label is outside {0, 1}.
  void validate() const;
};

/// Column roles for CSV ingestion. Loaded from JSON:
///
///   {
///     "label": "class",
///     "positive": ["tested_positive"],      // optional; default "1"
///     "negative": ["tested_negative"],      // optional; default "0"
///     "default_kind": "continuous",         // optional
///     "columns": {"sex": "categorical", "smoker": "binary", "id": "ignore"}
///   }
///
/// A column mapped to "label" in `columns` is equivalent to setting "label".
struct Schema {
  std::string label_column;
  std::set<std::string> positive_tokens{"1"};
  std::set<std::string> negative_tokens{"0"};
  ColumnKind default_kind = ColumnKind::continuous;
  std::map<std::string, ColumnKind> kinds;
  std::set<std::string> ignored;
  /// When false a CSV without the label column parses as unlabeled data.
  bool label_required = true;

  static Schema from_json(const nlohmann::json& j);
  static Schema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Parses a headed CSV. Rows keep file order. Missing values ("", "?",
/// "NA", "NaN") are rejected.
RawDataset load_csv(const std::filesystem::path& path, const Schema& schema);
RawDataset parse_csv(std::istream& in, const Schema& schema);

// ---------------------------------------------------------------------------
// Binary data

/// LEQ / GT for thresholded columns. For native binary and categorical
/// columns GT means "feature is 1 / equals the level" and LEQ its negation.
enum class Direction { leq, gt };

struct FeatureMeta {
  std::size_t origin = 0;            // index of the source raw feature
  std::string origin_name;
  std::optional<double> threshold;   // quantile cut; none for native columns
  std::optional<std::string> level;  // categorical level
  Direction direction = Direction::gt;
  bool is_disable = false;

  /// Human readable literal, e.g. "glucose <= 127.5" or "NOT smoker".
  std::string display_name() const;

  /// Metadata of the row-wise complement of this column.
  FeatureMeta negated() const;

  friend bool operator==(const FeatureMeta&, const FeatureMeta&) = default;
};

nlohmann::json to_json(const FeatureMeta& meta);
FeatureMeta feature_meta_from_json(const nlohmann::json& j);

/// n x d binary matrix a with labels y. Rows are bit-packed (feature j in
/// word j / 64, bit j % 64) so clause activations reduce to AND + popcount.
/// Immutable after construction.
class BinaryDataset {
 public:
  BinaryDataset() = default;

  /// `bits` holds n rows of words_for(d) words each. Throws DataError on
  /// shape mismatch, stray padding bits, non-binary labels, or a disable
  /// column that is not all ones.
  BinaryDataset(std::size_t n, std::size_t d, std::vector<std::uint64_t> bits,
                std::vector<std::uint8_t> labels, std::vector<FeatureMeta> meta,
                bool has_disable_column);

  /// Convenience constructor from a dense 0/1 matrix. Without metadata
  /// every column becomes its own origin.
  static BinaryDataset from_dense(const std::vector<std::vector<std::uint8_t>>& a,
                                  std::vector<std::uint8_t> labels,
                                  std::vector<FeatureMeta> meta = {});

  static constexpr std::size_t words_for(std::size_t d) { return (d + 63) / 64; }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  std::size_t words() const { return words_; }

  bool at(std::size_t i, std::size_t j) const {
    return ((bits_[i * words_ + j / 64] >> (j % 64)) & 1U) != 0;
  }
  const std::uint64_t* row(std::size_t i) const { return bits_.data() + i * words_; }
  const std::uint64_t* data() const { return bits_.data(); }

  std::uint8_t label(std::size_t i) const { return y_[i]; }
  std::span<const std::uint8_t> labels() const { return y_; }
  std::size_t positives() const;

  const std::vector<FeatureMeta>& columns() const { return meta_; }
  bool has_disable_column() const { return has_disable_; }

  std::vector<std::uint8_t> column(std::size_t j) const;

  friend bool operator==(const BinaryDataset&, const BinaryDataset&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint8_t> y_;
  std::vector<FeatureMeta> meta_;
  bool has_disable_ = false;
};

/// Prepends the constant-1 "always true" column used to disable CNF clauses.
/// Throws DataError if the dataset already has one.
BinaryDataset append_disable_column(const BinaryDataset& ds);

/// Flips every non-disable feature bit and every label; column metadata is
/// replaced by its negation so it still describes the stored bits.
BinaryDataset negate(const BinaryDataset& ds);

/// Rows of `ds` in the given order.
BinaryDataset select_rows(const BinaryDataset& ds, std::span<const std::size_t> rows);

/// For each column, the index of a column that is its exact row-wise
/// complement (lowest such index), or nullopt. Disable columns map to nullopt.
std::vector<std::optional<std::size_t>> complement_columns(const BinaryDataset& ds);

/// Same question answered from metadata alone: (origin, threshold, level)
/// equal and opposite direction.
std::vector<std::optional<std::size_t>> complement_columns(std::span<const FeatureMeta> meta);

nlohmann::json to_json(const BinaryDataset& ds);
BinaryDataset binary_dataset_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Binarization of raw features

struct BinarizeOptions {
  int quantiles = 9;  // Q cut points at probabilities q / (Q + 1)
};

/// Empirical quantile with linear interpolation between order statistics
/// (h = (n - 1) p). `sorted` must be ascending and nonempty.
double interpolated_quantile(std::span<const double> sorted, double p);

/// Thresholds and levels fitted on one dataset, reusable on another (for
/// example fitted on a training fold, applied to the test fold).
class FeatureBinarizer {
 public:
  struct Encoding {
    std::size_t origin = 0;
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<double> thresholds;   // continuous
    std::vector<std::string> levels;  // categorical
  };

  /// Throws DataError for Q < 1 or an empty dataset.
  static FeatureBinarizer fit(const RawDataset& raw, const BinarizeOptions& options = {});

  /// Columns are emitted per raw feature in order: continuous features as
  /// (c <= t_1..t_T) then (c > t_1..t_T); binary as (x, NOT x); categorical
  /// as (c = l, c != l) for each level in sorted order.
  BinaryDataset transform(const RawDataset& raw) const;

  const std::vector<Encoding>& encodings() const { return encodings_; }
  const std::vector<FeatureMeta>& columns() const { return columns_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::vector<std::string>& raw_names() const { return raw_names_; }

  nlohmann::json to_json() const;
  static FeatureBinarizer from_json(const nlohmann::json& j);

 private:
  void build_columns();

  std::vector<std::string> raw_names_;
  std::vector<Encoding> encodings_;
  std::vector<FeatureMeta> columns_;
  std::vector<std::string> warnings_;
};

/// fit + transform on the same data. Dropped-feature warnings are appended
/// to `warnings` when given, otherwise written to stderr.
BinaryDataset binarize(const RawDataset& raw, int quantiles,
                       std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // fold index per sample

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// Stratified k-fold split, deterministic for a given seed. Throws
/// std::invalid_argument for k < 2 or a class with fewer than k samples.
FoldPlan stratified_folds(std::span<const std::uint8_t> labels, std::size_t k,
                          std::uint64_t seed);
FoldPlan stratified_folds(const BinaryDataset& ds, std::size_t k, std::uint64_t seed);

}  // namespace twolevel
