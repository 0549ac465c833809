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
#include "amodal/dataset.hpp"

#include <algorithm>
#include <set>

namespace amodal {

const Category* Dataset::find_category(int id) const {
  auto it = std::find_if(categories.begin(), categories.end(),
                         [id](const Category& c) { return c.id == id; });
  return it == categories.end() ? nullptr : &*it;
}

const ImageRecord* Dataset::find_image(long long id) const {
  auto it = std::find_if(images.begin(), images.end(),
                         [id](const ImageRecord& im) { return im.id == id; });
  return it == images.end() ? nullptr : &*it;
}

std::size_t Dataset::annotation_count() const {
  std::size_t n = 0;
  for (const auto& image : images) n += image.annotations.size();
  return n;
}

bool is_occluded(const InstanceAnnotation& annotation) {
  return annotation.invisible.has_value() && !annotation.invisible->is_empty();
}

double occlusion_rate(const InstanceAnnotation& annotation) {
  if (!annotation.invisible.has_value()) return 0.0;
  const std::uint64_t amodal_area = annotation.amodal.area();
  if (amodal_area == 0) return 0.0;
  return static_cast<double>(annotation.invisible->area()) / static_cast<double>(amodal_area);
}

std::vector<Violation> depth_order_conflicts(const ImageRecord& image) {
  std::vector<Violation> out;
  const auto& anns = image.annotations;
  for (const auto& front : anns) {
    for (const auto& back : anns) {
      if (front.depth_order >= back.depth_order) continue;
      if (!front.visible.same_size(back.amodal)) continue;
      const BinaryMask covered = intersection(front.visible, back.amodal);
      if (covered.is_empty()) continue;
      const bool hidden = back.invisible.has_value() && back.invisible->same_size(covered) &&
                          is_subset(covered, *back.invisible);
      if (!hidden) {
        out.push_back({back.id, image.id,
                       "overlapped by front annotation " + std::to_string(front.id) +
                           " but overlap is not marked invisible"});
      }
    }
  }
  return out;
}

namespace {

void check_annotation(const ImageRecord& image, const InstanceAnnotation& a,
                      std::vector<Violation>& out) {
  auto report = [&](std::string message) { out.push_back({a.id, image.id, std::move(message)}); };
  const int h = image.canvas_height();
  const int w = image.canvas_width();
  auto dims_ok = [&](const BinaryMask& m, const char* which) {
    if (m.height() != h || m.width() != w) {
      report(std::string(which) + " mask is " + std::to_string(m.height()) + "x" +
             std::to_string(m.width()) + ", image canvas is " + std::to_string(h) + "x" +
             std::to_string(w));
      return false;
    }
    return true;
  };
  const bool amodal_ok = dims_ok(a.amodal, "amodal");
  const bool visible_ok = dims_ok(a.visible, "visible");
  const bool invisible_ok = !a.invisible || dims_ok(*a.invisible, "invisible");
  if (amodal_ok && a.amodal.is_empty()) report("amodal mask is empty");
  if (amodal_ok && visible_ok && !is_subset(a.visible, a.amodal)) {
    report("visible mask is not contained in amodal mask (" +
           std::to_string(difference(a.visible, a.amodal).area()) + " px outside)");
  }
  if (a.invisible && amodal_ok && visible_ok && invisible_ok) {
    if (*a.invisible != difference(a.amodal, a.visible)) {
      report("invisible mask differs from amodal minus visible");
    }
    if (intersection_area(a.visible, *a.invisible) != 0) {
      report("visible and invisible masks overlap");
    }
  }
  if (a.depth_order < 0) report("negative depth order");
}

}  // namespace

ValidationReport check_dataset(const Dataset& dataset, const ValidateOptions& options) {
  ValidationReport report;
  auto& out = report.violations;

  std::set<int> category_ids;
  for (const auto& c : dataset.categories) {
    if (c.id <= 0) out.push_back({-1, -1, "category id " + std::to_string(c.id) + " is not positive"});
    if (!category_ids.insert(c.id).second) {
      out.push_back({-1, -1, "duplicate category id " + std::to_string(c.id)});
    }
  }
  std::set<long long> image_ids;
  std::set<long long> annotation_ids;
  for (const auto& image : dataset.images) {
    if (!image_ids.insert(image.id).second) {
      out.push_back({-1, image.id, "duplicate image id"});
    }
    if (image.width <= 0 || image.height <= 0) {
      out.push_back({-1, image.id, "non-positive image dimensions"});
    }
    for (const auto& a : image.annotations) {
      if (!annotation_ids.insert(a.id).second) {
        out.push_back({a.id, image.id, "duplicate annotation id"});
      }
      if (a.image_id != image.id) {
        out.push_back({a.id, image.id,
                       "annotation image_id " + std::to_string(a.image_id) +
                           " does not match its image"});
      }
      if (!category_ids.contains(a.category_id)) {
        out.push_back({a.id, image.id, "unknown category id " + std::to_string(a.category_id)});
      }
      check_annotation(image, a, out);
    }
    auto conflicts = depth_order_conflicts(image);
    auto& sink = options.strict_depth_order ? report.violations : report.warnings;
    sink.insert(sink.end(), conflicts.begin(), conflicts.end());
  }
  return report;
}

void validate(const Dataset& dataset, const ValidateOptions& options) {
  auto report = check_dataset(dataset, options);
  if (!report.ok()) throw ValidationError(std::move(report.violations));
}

std::optional<DatasetFormat> parse_dataset_format(std::string_view name) {
  if (name == "native") return DatasetFormat::kNative;
  if (name == "cocoa") return DatasetFormat::kCocoa;
  if (name == "d2s_amodal" || name == "d2s-amodal" || name == "d2s") return DatasetFormat::kD2sAmodal;
  return std::nullopt;
}

std::string_view format_name(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::kNative: return "native";
    case DatasetFormat::kCocoa: return "cocoa";
    case DatasetFormat::kD2sAmodal: return "d2s_amodal";
  }
  return "native";
}

}  // namespace amodal
