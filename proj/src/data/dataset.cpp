#include <algorithm>
#include <array>
#include <sstream>

#include "twolevel/data.hpp"

namespace twolevel {
namespace {

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t k = 0;
  for (; k + 3 <= bytes.size(); k += 3) {
    const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8) | bytes[k + 2];
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back(kBase64Alphabet[v & 63]);
  }
  if (k + 1 == bytes.size()) {
    const std::uint32_t v = bytes[k] << 16;
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out += "==";
  } else if (k + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8);
    out.push_back(kBase64Alphabet[(v >> 18) & 63]);
    out.push_back(kBase64Alphabet[(v >> 12) & 63]);
    out.push_back(kBase64Alphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> value{};
  value.fill(-1);
  for (int c = 0; c < 64; ++c) value[static_cast<unsigned char>(kBase64Alphabet[c])] = c;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = value[static_cast<unsigned char>(ch)];
    if (v < 0) throw DataError("invalid base64 character in serialized dataset");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

// Packs `count` bits (little-endian within bytes) of a word range.
std::vector<std::uint8_t> pack_bits(const std::uint64_t* words, std::size_t count) {
  std::vector<std::uint8_t> bytes((count + 7) / 8, 0);
  for (std::size_t j = 0; j < count; ++j) {
    if ((words[j / 64] >> (j % 64)) & 1U) bytes[j / 8] |= static_cast<std::uint8_t>(1U << (j % 8));
  }
  return bytes;
}

std::string format_threshold(double t) {
  std::ostringstream os;
  os.precision(6);
  os << t;
  return os.str();
}

}  // namespace

std::string FeatureMeta::display_name() const {
  if (is_disable) return "TRUE";
  if (threshold) {
    return origin_name + (direction == Direction::leq ? " <= " : " > ") +
           format_threshold(*threshold);
  }
  if (level) return origin_name + (direction == Direction::gt ? " = " : " != ") + *level;
  return direction == Direction::gt ? origin_name : "NOT " + origin_name;
}

FeatureMeta FeatureMeta::negated() const {
  FeatureMeta out = *this;
  if (!is_disable) out.direction = direction == Direction::gt ? Direction::leq : Direction::gt;
  return out;
}

nlohmann::json to_json(const FeatureMeta& m) {
  nlohmann::json j{{"origin", m.origin},
                   {"origin_name", m.origin_name},
                   {"direction", m.direction == Direction::leq ? "leq" : "gt"},
                   {"is_disable", m.is_disable},
                   {"name", m.display_name()}};
  j["threshold"] = m.threshold ? nlohmann::json(*m.threshold) : nlohmann::json(nullptr);
  j["level"] = m.level ? nlohmann::json(*m.level) : nlohmann::json(nullptr);
  return j;
}

FeatureMeta feature_meta_from_json(const nlohmann::json& j) {
  FeatureMeta m;
  m.origin = j.at("origin").get<std::size_t>();
  m.origin_name = j.value("origin_name", std::string{});
  const auto dir = j.at("direction").get<std::string>();
  if (dir != "leq" && dir != "gt") throw DataError("invalid direction '" + dir + "'");
  m.direction = dir == "leq" ? Direction::leq : Direction::gt;
  m.is_disable = j.value("is_disable", false);
  if (j.contains("threshold") && !j.at("threshold").is_null()) {
    m.threshold = j.at("threshold").get<double>();
  }
  if (j.contains("level") && !j.at("level").is_null()) m.level = j.at("level").get<std::string>();
  return m;
}

BinaryDataset::BinaryDataset(std::size_t n, std::size_t d, std::vector<std::uint64_t> bits,
                             std::vector<std::uint8_t> labels, std::vector<FeatureMeta> meta,
                             bool has_disable_column)
    : n_(n),
      d_(d),
      words_(words_for(d)),
      bits_(std::move(bits)),
      y_(std::move(labels)),
      meta_(std::move(meta)),
      has_disable_(has_disable_column) {
  if (bits_.size() != n_ * words_) throw DataError("bit matrix size does not match n x d");
  if (y_.size() != n_) throw DataError("label count does not match row count");
  if (meta_.size() != d_) throw DataError("column metadata count does not match d");
  for (std::size_t i = 0; i < n_; ++i) {
    if (y_[i] > 1) throw DataError("non-binary label at row " + std::to_string(i + 1));
  }
  if (d_ % 64 != 0 && words_ > 0) {
    const std::uint64_t pad_mask = ~((std::uint64_t{1} << (d_ % 64)) - 1);
    for (std::size_t i = 0; i < n_; ++i) {
      if (bits_[i * words_ + words_ - 1] & pad_mask) {
        throw DataError("padding bits set in row " + std::to_string(i));
      }
    }
  }
  for (std::size_t j = 0; j < d_; ++j) {
    if (meta_[j].is_disable && !(has_disable_ && j == 0)) {
      throw DataError("only column 0 may be the disable column");
    }
  }
  if (has_disable_) {
    if (d_ == 0 || !meta_[0].is_disable) throw DataError("disable column must be column 0");
    for (std::size_t i = 0; i < n_; ++i) {
      if (!at(i, 0)) throw DataError("disable column is not all ones");
    }
  }
}

BinaryDataset BinaryDataset::from_dense(const std::vector<std::vector<std::uint8_t>>& a,
                                        std::vector<std::uint8_t> labels,
                                        std::vector<FeatureMeta> meta) {
  const std::size_t n = a.size();
  const std::size_t d = n == 0 ? meta.size() : a.front().size();
  const std::size_t words = words_for(d);
  std::vector<std::uint64_t> bits(n * words, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].size() != d) throw DataError("ragged dense matrix at row " + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) {
      if (a[i][j] > 1) throw DataError("non-binary feature value at row " + std::to_string(i));
      if (a[i][j]) bits[i * words + j / 64] |= std::uint64_t{1} << (j % 64);
    }
  }
  if (meta.empty()) {
    meta.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      meta[j].origin = j;
      meta[j].origin_name = "x" + std::to_string(j);
    }
  }
  const bool disable = !meta.empty() && meta.front().is_disable;
  return BinaryDataset(n, d, std::move(bits), std::move(labels), std::move(meta), disable);
}

std::size_t BinaryDataset::positives() const {
  return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), 1));
}

std::vector<std::uint8_t> BinaryDataset::column(std::size_t j) const {
  std::vector<std::uint8_t> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = at(i, j) ? 1 : 0;
  return out;
}

BinaryDataset append_disable_column(const BinaryDataset& ds) {
  if (ds.has_disable_column()) throw DataError("dataset already has a disable column");
  const std::size_t n = ds.rows();
  const std::size_t d = ds.cols() + 1;
  const std::size_t words = BinaryDataset::words_for(d);
  std::vector<std::uint64_t> bits(n * words, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t* dst = bits.data() + i * words;
    dst[0] = 1;
    for (std::size_t j = 0; j < ds.cols(); ++j) {
      if (ds.at(i, j)) dst[(j + 1) / 64] |= std::uint64_t{1} << ((j + 1) % 64);
    }
  }
  std::vector<FeatureMeta> meta;
  meta.reserve(d);
  FeatureMeta disable;
  disable.is_disable = true;
  disable.origin_name = "TRUE";
  disable.origin = static_cast<std::size_t>(-1);
  meta.push_back(disable);
  meta.insert(meta.end(), ds.columns().begin(), ds.columns().end());
  std::vector<std::uint8_t> labels(ds.labels().begin(), ds.labels().end());
  return BinaryDataset(n, d, std::move(bits), std::move(labels), std::move(meta), true);
}

BinaryDataset negate(const BinaryDataset& ds) {
  const std::size_t n = ds.rows();
  const std::size_t d = ds.cols();
  const std::size_t words = ds.words();
  std::vector<std::uint64_t> mask(words, ~std::uint64_t{0});
  if (d % 64 != 0 && words > 0) mask.back() = (std::uint64_t{1} << (d % 64)) - 1;
  if (ds.has_disable_column()) mask[0] &= ~std::uint64_t{1};
  std::vector<std::uint64_t> bits(ds.data(), ds.data() + n * words);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < words; ++k) bits[i * words + k] ^= mask[k];
  }
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = 1 - ds.label(i);
  std::vector<FeatureMeta> meta;
  meta.reserve(d);
  for (const auto& m : ds.columns()) meta.push_back(m.negated());
  return BinaryDataset(n, d, std::move(bits), std::move(labels), std::move(meta),
                       ds.has_disable_column());
}

BinaryDataset select_rows(const BinaryDataset& ds, std::span<const std::size_t> rows) {
  const std::size_t words = ds.words();
  std::vector<std::uint64_t> bits;
  bits.reserve(rows.size() * words);
  std::vector<std::uint8_t> labels;
  labels.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= ds.rows()) throw std::out_of_range("row index out of range");
    bits.insert(bits.end(), ds.row(i), ds.row(i) + words);
    labels.push_back(ds.label(i));
  }
  return BinaryDataset(rows.size(), ds.cols(), std::move(bits), std::move(labels), ds.columns(),
                       ds.has_disable_column());
}

std::vector<std::optional<std::size_t>> complement_columns(const BinaryDataset& ds) {
  const std::size_t d = ds.cols();
  std::vector<std::vector<std::uint8_t>> cols(d);
  for (std::size_t j = 0; j < d; ++j) cols[j] = ds.column(j);
  std::vector<std::optional<std::size_t>> partner(d);
  for (std::size_t j = 0; j < d; ++j) {
    if (ds.columns()[j].is_disable) continue;
    for (std::size_t k = 0; k < d && !partner[j]; ++k) {
      if (k == j || ds.columns()[k].is_disable) continue;
      bool complementary = true;
      for (std::size_t i = 0; i < ds.rows() && complementary; ++i) {
        complementary = cols[j][i] + cols[k][i] == 1;
      }
      if (complementary) partner[j] = k;
    }
  }
  return partner;
}

std::vector<std::optional<std::size_t>> complement_columns(std::span<const FeatureMeta> meta) {
  std::vector<std::optional<std::size_t>> partner(meta.size());
  for (std::size_t j = 0; j < meta.size(); ++j) {
    if (meta[j].is_disable) continue;
    const FeatureMeta want = meta[j].negated();
    for (std::size_t k = 0; k < meta.size(); ++k) {
      if (k != j && meta[k].origin == want.origin && meta[k].threshold == want.threshold &&
          meta[k].level == want.level && meta[k].direction == want.direction &&
          !meta[k].is_disable) {
        partner[j] = k;
        break;
      }
    }
  }
  return partner;
}

nlohmann::json to_json(const BinaryDataset& ds) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.rows(); ++i) rows.push_back(base64_encode(pack_bits(ds.row(i), ds.cols())));
  std::vector<std::uint64_t> label_words((ds.rows() + 63) / 64, 0);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.label(i)) label_words[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& m : ds.columns()) columns.push_back(to_json(m));
  return {{"format", "twolevel.binary_dataset"},
          {"version", 1},
          {"n", ds.rows()},
          {"d", ds.cols()},
          {"has_disable_column", ds.has_disable_column()},
          {"labels", base64_encode(pack_bits(label_words.data(), ds.rows()))},
          {"rows", rows},
          {"columns", columns}};
}

BinaryDataset binary_dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "twolevel.binary_dataset") {
      throw DataError("not a serialized binary dataset");
    }
    if (j.at("version").get<int>() != 1) throw DataError("unsupported binary dataset version");
    const auto n = j.at("n").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    const std::size_t words = BinaryDataset::words_for(d);
    const auto& rows = j.at("rows");
    if (rows.size() != n) throw DataError("row count does not match n");
    std::vector<std::uint64_t> bits(n * words, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto bytes = base64_decode(rows[i].get<std::string>());
      if (bytes.size() != (d + 7) / 8) throw DataError("row " + std::to_string(i) + " has wrong length");
      for (std::size_t b = 0; b < bytes.size(); ++b) {
        bits[i * words + b / 8] |= static_cast<std::uint64_t>(bytes[b]) << (8 * (b % 8));
      }
    }
    const auto label_bytes = base64_decode(j.at("labels").get<std::string>());
    if (label_bytes.size() != (n + 7) / 8) throw DataError("label block has wrong length");
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = (label_bytes[i / 8] >> (i % 8)) & 1U;
    std::vector<FeatureMeta> meta;
    for (const auto& c : j.at("columns")) meta.push_back(feature_meta_from_json(c));
    return BinaryDataset(n, d, std::move(bits), std::move(labels), std::move(meta),
                         j.at("has_disable_column").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed serialized dataset: ") + e.what());
  }
}

}  // namespace twolevel
