#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "twolevel/data.hpp"

namespace twolevel {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// RFC 4180 style: double quotes delimit fields, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(trim(field));
  return fields;
}

bool is_missing(const std::string& token) {
  return token.empty() || token == "?" || token == "NA" || token == "NaN" || token == "nan";
}

std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

double parse_number(const std::string& token, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw DataError("cannot parse '" + token + "' as a number at " + where(row, column));
  }
  return value;
}

double parse_binary(const std::string& token, std::size_t row, const std::string& column) {
  std::string lower = token;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "1" || lower == "true" || lower == "yes") return 1.0;
  if (lower == "0" || lower == "false" || lower == "no") return 0.0;
  throw DataError("non-binary value '" + token + "' at " + where(row, column));
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous:
      return "continuous";
    case ColumnKind::categorical:
      return "categorical";
    case ColumnKind::binary:
      return "binary";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "binary") return ColumnKind::binary;
  throw DataError("unknown column kind '" + s + "'");
}

std::vector<std::string> RawDataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(features.size());
  for (const auto& f : features) names.push_back(f.name);
  return names;
}

RawDataset RawDataset::subset(std::span<const std::size_t> rows) const {
  RawDataset out;
  out.label_name = label_name;
  out.labeled = labeled;
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) out.labels.push_back(labels.at(i));
  out.features.reserve(features.size());
  for (const auto& col : features) {
    RawColumn c{col.name, col.kind, {}, {}};
    if (col.kind == ColumnKind::categorical) {
      c.categories.reserve(rows.size());
      for (std::size_t i : rows) c.categories.push_back(col.categories.at(i));
    } else {
      c.numeric.reserve(rows.size());
      for (std::size_t i : rows) c.numeric.push_back(col.numeric.at(i));
    }
    out.features.push_back(std::move(c));
  }
  return out;
}

void RawDataset::validate() const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw DataError("non-binary label at row " + std::to_string(i + 1));
  }
  for (const auto& col : features) {
    const std::size_t len =
        col.kind == ColumnKind::categorical ? col.categories.size() : col.numeric.size();
    if (len != labels.size()) {
      throw DataError("column '" + col.name + "' has " + std::to_string(len) +
                      " values but there are " + std::to_string(labels.size()) + " labels");
    }
    if (col.kind == ColumnKind::binary) {
      for (double v : col.numeric) {
        if (v != 0.0 && v != 1.0) throw DataError("binary column '" + col.name + "' has value " +
                                                  std::to_string(v));
      }
    }
  }
}

Schema Schema::from_json(const nlohmann::json& j) {
  Schema s;
  if (j.contains("label")) s.label_column = j.at("label").get<std::string>();
  auto token_set = [](const nlohmann::json& arr) {
    std::set<std::string> out;
    if (arr.is_array()) {
      for (const auto& t : arr) out.insert(t.is_string() ? t.get<std::string>() : t.dump());
    } else {
      out.insert(arr.is_string() ? arr.get<std::string>() : arr.dump());
    }
    return out;
  };
  if (j.contains("positive")) s.positive_tokens = token_set(j.at("positive"));
  if (j.contains("negative")) s.negative_tokens = token_set(j.at("negative"));
  if (j.contains("default_kind")) {
    s.default_kind = column_kind_from_string(j.at("default_kind").get<std::string>());
  }
  if (j.contains("columns")) {
    for (const auto& [name, kind] : j.at("columns").items()) {
      const auto k = kind.get<std::string>();
      if (k == "label") {
        s.label_column = name;
      } else if (k == "ignore") {
        s.ignored.insert(name);
      } else {
        s.kinds[name] = column_kind_from_string(k);
      }
    }
  }
  if (s.label_column.empty()) throw DataError("schema does not name a label column");
  for (const auto& t : s.positive_tokens) {
    if (s.negative_tokens.count(t) != 0) {
      throw DataError("label token '" + t + "' is both positive and negative");
    }
  }
  return s;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid schema file " + path.string() + ": " + e.what());
  }
}

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::object();
  for (const auto& [name, kind] : kinds) cols[name] = twolevel::to_string(kind);
  for (const auto& name : ignored) cols[name] = "ignore";
  return {{"label", label_column},
          {"positive", positive_tokens},
          {"negative", negative_tokens},
          {"default_kind", twolevel::to_string(default_kind)},
          {"columns", cols}};
}

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file " + path.string());
  return parse_csv(in, schema);
}

RawDataset parse_csv(std::istream& in, const Schema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input (header row required)");
  const auto header = split_csv_line(line);

  std::optional<std::size_t> label_index;
  RawDataset raw;
  raw.label_name = schema.label_column;
  std::vector<std::optional<std::size_t>> feature_of(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) {
      label_index = c;
    } else if (schema.ignored.count(header[c]) == 0) {
      const auto it = schema.kinds.find(header[c]);
      feature_of[c] = raw.features.size();
      raw.features.push_back(
          RawColumn{header[c], it == schema.kinds.end() ? schema.default_kind : it->second, {}, {}});
    }
  }
  if (!label_index && schema.label_required) {
    throw DataError("label column '" + schema.label_column + "' not in header");
  }
  raw.labeled = label_index.has_value();
  for (const auto& [name, kind] : schema.kinds) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError("schema column '" + name + "' not in header");
    }
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    const std::string& label_token = label_index ? fields[*label_index] : std::string();
    if (!label_index) {
      raw.labels.push_back(0);
    } else if (schema.positive_tokens.count(label_token) != 0) {
      raw.labels.push_back(1);
    } else if (schema.negative_tokens.count(label_token) != 0) {
      raw.labels.push_back(0);
    } else {
      throw DataError("non-binary label at row " + std::to_string(row) + " ('" + label_token +
                      "')");
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (!feature_of[c]) continue;
      auto& col = raw.features[*feature_of[c]];
      const std::string& token = fields[c];
      if (is_missing(token)) throw DataError("missing value at " + where(row, col.name));
      switch (col.kind) {
        case ColumnKind::continuous:
          col.numeric.push_back(parse_number(token, row, col.name));
          break;
        case ColumnKind::binary:
          col.numeric.push_back(parse_binary(token, row, col.name));
          break;
        case ColumnKind::categorical:
          col.categories.push_back(token);
          break;
      }
    }
  }
  return raw;
}

}  // namespace twolevel
