#pragma once

// CLI11 config reader for JSON objects whose keys are long flag names:
// {"folds": 10, "algos": "am,bcd"}. Top-level keys apply to the subcommand
// being run; an object value {"sweep": {...}} scopes keys to one subcommand.
// Arrays become repeated inputs.

#include <algorithm>
#include <istream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace twolevel::cli {

class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& results = opt->results();
        j[name] = results.size() == 1 ? nlohmann::json(results.front()) : nlohmann::json(results);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<std::string> active;
    for (const CLI::App* sub : root_->get_subcommands()) active.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        if (std::find(active.begin(), active.end(), key) == active.end()) continue;
        for (const auto& [inner, v] : value.items()) items.push_back(make_item({key}, inner, v));
      } else {
        items.push_back(make_item(active, key, value));
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem make_item(std::vector<std::string> parents, const std::string& name,
                                   const nlohmann::json& value) {
    CLI::ConfigItem item;
    item.parents = std::move(parents);
    item.name = name;
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(value));
    }
    return item;
  }

  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  const CLI::App* root_;
};

}  // namespace twolevel::cli
