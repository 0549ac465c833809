// Copyright 2026 The Amodal Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "json_config.hpp"

#include "json.hpp"

namespace amodal::cli {

namespace {

using nlohmann::json;

void collect(const json& value, const std::string& name, const std::vector<std::string>& parents,
             std::vector<CLI::ConfigItem>& out) {
  if (value.is_object()) {
    std::vector<std::string> next = parents;
    if (!name.empty()) next.push_back(name);
    for (auto it = value.begin(); it != value.end(); ++it) collect(it.value(), it.key(), next, out);
    return;
  }
  if (name.empty()) throw CLI::ConversionError("config file must contain a JSON object");
  CLI::ConfigItem item;
  item.name = name;
  item.parents = parents;
  auto scalar = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  if (value.is_array()) {
    for (const auto& v : value) item.inputs.push_back(scalar(v));
  } else if (!value.is_null()) {
    item.inputs.push_back(scalar(value));
  } else {
    return;
  }
  out.push_back(std::move(item));
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (default_also && !opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j.dump(2);
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json j;
  try {
    input >> j;
  } catch (const json::exception& e) {
    throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
  }
  std::vector<CLI::ConfigItem> out;
  collect(j, "", {}, out);
  return out;
}

}  // namespace amodal::cli
