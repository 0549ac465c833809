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
//
// Readers for the native, COCOA and D2S-amodal JSON layouts, and the native
// writer. All three readers funnel through RawAnnotation so that invisible
// mask synthesis, visible repair and validation behave identically.
#include <fstream>
#include <map>
#include <sstream>

#include "amodal/dataset.hpp"
#include "segmentation_json.hpp"

namespace amodal {

namespace {

using detail::Json;
using detail::OrderedJson;

constexpr std::string_view kNativeFormatTag = "amodal-native";
constexpr int kNativeFormatVersion = 1;

struct RawAnnotation {
  long long id = 0;
  long long image_id = 0;
  int category_id = 0;
  const Json* amodal = nullptr;
  const Json* visible = nullptr;
  const Json* invisible = nullptr;
  bool occluded_flag = false;
  int depth_order = 0;
  bool is_crowd = false;
};

const Json* field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

bool truthy(const Json* value) {
  if (value == nullptr) return false;
  if (value->is_boolean()) return value->get<bool>();
  if (value->is_number()) return value->get<double>() != 0.0;
  return false;
}

Margins margins_from(const Json* value) {
  if (value == nullptr) return {};
  if (!value->is_array() || value->size() != 4) {
    throw Error(ErrorCode::kParseError, "margins must be [left, top, right, bottom]");
  }
  Margins m{(*value)[0].get<int>(), (*value)[1].get<int>(), (*value)[2].get<int>(),
            (*value)[3].get<int>()};
  if (m.left < 0 || m.top < 0 || m.right < 0 || m.bottom < 0) {
    throw Error(ErrorCode::kParseError, "margins must be non-negative");
  }
  return m;
}

ImageRecord image_from(const Json& j) {
  ImageRecord image;
  image.id = j.at("id").get<long long>();
  image.width = j.at("width").get<int>();
  image.height = j.at("height").get<int>();
  if (const Json* name = field(j, "file_name")) image.file_name = name->get<std::string>();
  if (const Json* p = field(j, "padding")) image.padding = margins_from(p);
  image.canvas_margin = margins_from(field(j, "canvas_margin"));
  return image;
}

class Assembler {
 public:
  Assembler(const LoadOptions& options, LoadReport& report) : options_(options), report_(report) {}

  void add_image(ImageRecord image) {
    index_[image.id] = images_.size();
    images_.push_back(std::move(image));
  }

  void add(const RawAnnotation& raw) {
    auto it = index_.find(raw.image_id);
    if (it == index_.end()) {
      orphans_.push_back({raw.id, raw.image_id, "annotation refers to unknown image"});
      return;
    }
    ImageRecord& image = images_[it->second];
    const int h = image.canvas_height();
    const int w = image.canvas_width();
    const double sx = image.canvas_margin.left;
    const double sy = image.canvas_margin.top;

    InstanceAnnotation a;
    a.id = raw.id;
    a.image_id = raw.image_id;
    a.category_id = raw.category_id;
    a.depth_order = raw.depth_order;
    a.is_crowd = raw.is_crowd;
    bool clipped = false;
    if (raw.amodal == nullptr) {
      orphans_.push_back({raw.id, raw.image_id, "annotation has no amodal segmentation"});
      return;
    }
    a.amodal = detail::parse_segmentation(*raw.amodal, h, w, sx, sy, &clipped).value();
    auto visible = raw.visible != nullptr
                       ? detail::parse_segmentation(*raw.visible, h, w, sx, sy, &clipped)
                       : std::nullopt;
    a.visible = visible.value_or(a.amodal);
    if (raw.invisible != nullptr) {
      a.invisible = detail::parse_segmentation(*raw.invisible, h, w, sx, sy, &clipped);
    }
    if (clipped) ++report_.clipped_polygons;

    if (a.visible.same_size(a.amodal) && !is_subset(a.visible, a.amodal)) {
      const std::uint64_t excess = difference(a.visible, a.amodal).area();
      if (excess <= options_.visible_slack_pixels) {
        a.visible = intersection(a.visible, a.amodal);
        if (a.invisible && a.invisible->same_size(a.amodal)) {
          a.invisible = difference(a.amodal, a.visible);
        }
        ++report_.repaired_visible;
      }
    }
    if (!a.invisible && raw.occluded_flag && a.visible.same_size(a.amodal)) {
      a.invisible = difference(a.amodal, a.visible);
      ++report_.synthesized_invisible;
    }
    image.annotations.push_back(std::move(a));
  }

  Dataset finish(std::vector<Category> categories, std::string split_name) {
    Dataset ds{std::move(categories), std::move(images_), std::move(split_name)};
    ValidationReport check = check_dataset(ds);
    check.violations.insert(check.violations.begin(), orphans_.begin(), orphans_.end());
    report_.warnings = std::move(check.warnings);
    if (!check.violations.empty()) throw ValidationError(std::move(check.violations));
    return ds;
  }

 private:
  const LoadOptions& options_;
  LoadReport& report_;
  std::vector<ImageRecord> images_;
  std::map<long long, std::size_t> index_;
  std::vector<Violation> orphans_;
};

std::vector<Category> categories_from(const Json& root) {
  std::vector<Category> out;
  if (const Json* cats = field(root, "categories")) {
    for (const auto& c : *cats) {
      Category cat;
      cat.id = c.at("id").get<int>();
      if (const Json* name = field(c, "name")) cat.name = name->get<std::string>();
      cat.is_stuff = truthy(field(c, "isstuff"));
      out.push_back(std::move(cat));
    }
  }
  return out;
}

void add_images(const Json& root, Assembler& assembler) {
  if (const Json* images = field(root, "images")) {
    for (const auto& j : *images) assembler.add_image(image_from(j));
  }
}

std::string split_from(const Json& root) {
  const Json* split = field(root, "split_name");
  return split != nullptr ? split->get<std::string>() : std::string();
}

Dataset read_native(const Json& root, Assembler& assembler) {
  add_images(root, assembler);
  if (const Json* anns = field(root, "annotations")) {
    for (const auto& j : *anns) {
      RawAnnotation raw;
      raw.id = j.at("id").get<long long>();
      raw.image_id = j.at("image_id").get<long long>();
      raw.category_id = j.at("category_id").get<int>();
      raw.amodal = field(j, "amodal_seg");
      raw.visible = field(j, "visible_seg");
      raw.invisible = field(j, "invisible_seg");
      raw.occluded_flag = truthy(field(j, "occluded"));
      if (const Json* d = field(j, "depth_order")) raw.depth_order = d->get<int>();
      raw.is_crowd = truthy(field(j, "iscrowd"));
      assembler.add(raw);
    }
  }
  return assembler.finish(categories_from(root), split_from(root));
}

// COCOA: class-less; each annotation entry carries a list of regions.
constexpr int kCocoaObjectCategory = 1;
constexpr int kCocoaStuffCategory = 2;

Dataset read_cocoa(const Json& root, Assembler& assembler) {
  add_images(root, assembler);
  long long next_id = 1;
  if (const Json* anns = field(root, "annotations")) {
    for (const auto& entry : *anns) {
      const long long image_id = entry.at("image_id").get<long long>();
      const Json* regions = field(entry, "regions");
      if (regions == nullptr) continue;
      for (const auto& region : *regions) {
        RawAnnotation raw;
        raw.id = next_id++;
        raw.image_id = image_id;
        raw.category_id = truthy(field(region, "isstuff")) ? kCocoaStuffCategory : kCocoaObjectCategory;
        raw.amodal = field(region, "segmentation");
        raw.visible = field(region, "visible_mask");
        raw.invisible = field(region, "invisible_mask");
        const Json* rate = field(region, "occlude_rate");
        raw.occluded_flag = rate != nullptr && rate->is_number() && rate->get<double>() > 0.0;
        if (const Json* order = field(region, "order")) raw.depth_order = order->get<int>();
        assembler.add(raw);
      }
    }
  }
  std::vector<Category> categories = {{kCocoaObjectCategory, "object", false},
                                      {kCocoaStuffCategory, "stuff", true}};
  return assembler.finish(std::move(categories), split_from(root));
}

Dataset read_d2s(const Json& root, Assembler& assembler) {
  add_images(root, assembler);
  if (const Json* anns = field(root, "annotations")) {
    for (const auto& j : *anns) {
      RawAnnotation raw;
      raw.id = j.at("id").get<long long>();
      raw.image_id = j.at("image_id").get<long long>();
      raw.category_id = j.at("category_id").get<int>();
      raw.amodal = field(j, "segmentation");
      raw.visible = field(j, "visible_mask");
      raw.invisible = field(j, "invisible_mask");
      raw.occluded_flag = truthy(field(j, "occluded"));
      if (const Json* rate = field(j, "occlude_rate"); rate != nullptr && rate->is_number()) {
        raw.occluded_flag = raw.occluded_flag || rate->get<double>() > 0.0;
      }
      if (const Json* d = field(j, "order")) raw.depth_order = d->get<int>();
      if (const Json* d = field(j, "depth_order")) raw.depth_order = d->get<int>();
      raw.is_crowd = truthy(field(j, "iscrowd"));
      assembler.add(raw);
    }
  }
  return assembler.finish(categories_from(root), split_from(root));
}

OrderedJson margins_json(const Margins& m) { return {m.left, m.top, m.right, m.bottom}; }

}  // namespace

Dataset parse_dataset(std::string_view json_text, DatasetFormat format, const LoadOptions& options,
                      LoadReport* report) {
  LoadReport local;
  LoadReport& sink = report != nullptr ? *report : local;
  sink = LoadReport{};
  const Json root = detail::parse_json_text(json_text);
  if (!root.is_object()) throw Error(ErrorCode::kParseError, "dataset root must be an object");
  Assembler assembler(options, sink);
  try {
    switch (format) {
      case DatasetFormat::kNative: return read_native(root, assembler);
      case DatasetFormat::kCocoa: return read_cocoa(root, assembler);
      case DatasetFormat::kD2sAmodal: return read_d2s(root, assembler);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  throw Error(ErrorCode::kParseError, "unknown dataset format");
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& options, LoadReport* report) {
  return parse_dataset(read_text_file(path), format, options, report);
}

std::string to_native_json(const Dataset& dataset) {
  // One record per line keeps files diffable without exploding RLE lists.
  std::ostringstream out;
  out << "{\n";
  out << "  \"format\": " << OrderedJson(kNativeFormatTag).dump() << ",\n";
  out << "  \"version\": " << kNativeFormatVersion << ",\n";
  out << "  \"split_name\": " << OrderedJson(dataset.split_name).dump() << ",\n";

  auto write_list = [&](const char* key, const std::vector<OrderedJson>& items, bool last) {
    out << "  \"" << key << "\": [";
    for (std::size_t i = 0; i < items.size(); ++i) {
      out << (i == 0 ? "\n    " : ",\n    ") << items[i].dump();
    }
    out << (items.empty() ? "]" : "\n  ]") << (last ? "\n" : ",\n");
  };

  std::vector<OrderedJson> categories;
  for (const auto& c : dataset.categories) {
    OrderedJson j;
    j["id"] = c.id;
    j["name"] = c.name;
    j["isstuff"] = c.is_stuff;
    categories.push_back(std::move(j));
  }
  std::vector<OrderedJson> images;
  std::vector<OrderedJson> annotations;
  for (const auto& image : dataset.images) {
    OrderedJson j;
    j["id"] = image.id;
    j["width"] = image.width;
    j["height"] = image.height;
    j["file_name"] = image.file_name;
    if (image.padding) j["padding"] = margins_json(*image.padding);
    if (!image.canvas_margin.is_zero()) j["canvas_margin"] = margins_json(image.canvas_margin);
    images.push_back(std::move(j));
    for (const auto& a : image.annotations) {
      OrderedJson aj;
      aj["id"] = a.id;
      aj["image_id"] = a.image_id;
      aj["category_id"] = a.category_id;
      aj["depth_order"] = a.depth_order;
      aj["iscrowd"] = a.is_crowd ? 1 : 0;
      aj["amodal_seg"] = detail::mask_to_json(a.amodal);
      aj["visible_seg"] = detail::mask_to_json(a.visible);
      if (a.invisible) aj["invisible_seg"] = detail::mask_to_json(*a.invisible);
      annotations.push_back(std::move(aj));
    }
  }
  write_list("categories", categories, false);
  write_list("images", images, false);
  write_list("annotations", annotations, true);
  out << "}\n";
  return out.str();
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, to_native_json(dataset));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

}  // namespace amodal
