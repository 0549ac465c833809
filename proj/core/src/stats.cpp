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
#include "amodal/stats.hpp"

#include <algorithm>
#include <cmath>

#include "segmentation_json.hpp"

namespace amodal {

namespace {

double percent(double num, double den) { return den > 0 ? 100.0 * num / den : 0.0; }

void finalize(SplitStats& s) {
  s.img_occl_rate = percent(static_cast<double>(s.num_imgs_with_occl), static_cast<double>(s.num_imgs));
  s.obj_occl_rate = percent(static_cast<double>(s.num_objs_occl), static_cast<double>(s.num_objs));
  s.avg_or_per_region_all = percent(s.occlusion_rate_sum, static_cast<double>(s.num_objs));
  s.avg_or_per_region_occl = percent(s.occlusion_rate_sum, static_cast<double>(s.num_objs_occl));
}

}  // namespace

SplitStats compute_stats(const Dataset& dataset) {
  SplitStats s;
  for (const auto& image : dataset.images) {
    ++s.num_imgs;
    bool occluded_image = false;
    for (const auto& a : image.annotations) {
      ++s.num_objs;
      if (is_occluded(a)) {
        ++s.num_objs_occl;
        occluded_image = true;
        s.occlusion_rate_sum += occlusion_rate(a);
      }
    }
    if (occluded_image) ++s.num_imgs_with_occl;
  }
  finalize(s);
  return s;
}

SplitStats merge(const SplitStats& a, const SplitStats& b) {
  SplitStats s;
  s.num_imgs = a.num_imgs + b.num_imgs;
  s.num_imgs_with_occl = a.num_imgs_with_occl + b.num_imgs_with_occl;
  s.num_objs = a.num_objs + b.num_objs;
  s.num_objs_occl = a.num_objs_occl + b.num_objs_occl;
  s.occlusion_rate_sum = a.occlusion_rate_sum + b.occlusion_rate_sum;
  finalize(s);
  return s;
}

std::string stats_table(const std::vector<std::pair<std::string, SplitStats>>& columns) {
  struct Row {
    const char* label;
    std::string (*cell)(const SplitStats&);
  };
  static const Row rows[] = {
      {"num imgs", [](const SplitStats& s) { return std::to_string(s.num_imgs); }},
      {"num imgs w/ occl", [](const SplitStats& s) { return std::to_string(s.num_imgs_with_occl); }},
      {"img OR [%]", [](const SplitStats& s) { return std::to_string(std::lround(s.img_occl_rate)); }},
      {"num objs", [](const SplitStats& s) { return std::to_string(s.num_objs); }},
      {"num objs occl", [](const SplitStats& s) { return std::to_string(s.num_objs_occl); }},
      {"obj OR [%]", [](const SplitStats& s) { return std::to_string(std::lround(s.obj_occl_rate)); }},
      {"avg OR / reg (all) [%]",
       [](const SplitStats& s) { return std::to_string(std::lround(s.avg_or_per_region_all)); }},
      {"avg OR / reg (occl) [%]",
       [](const SplitStats& s) { return std::to_string(std::lround(s.avg_or_per_region_occl)); }},
  };
  std::size_t label_width = 0;
  for (const auto& r : rows) label_width = std::max(label_width, std::string(r.label).size());
  std::vector<std::size_t> widths;
  for (const auto& [name, stats] : columns) {
    std::size_t w = name.size();
    for (const auto& r : rows) w = std::max(w, r.cell(stats).size());
    widths.push_back(w);
  }
  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w - s.size(), ' ') + s; };
  auto pad_right = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  std::string out = pad_right("", label_width);
  for (std::size_t c = 0; c < columns.size(); ++c) out += "  " + pad_left(columns[c].first, widths[c]);
  out += '\n';
  for (const auto& r : rows) {
    out += pad_right(r.label, label_width);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out += "  " + pad_left(r.cell(columns[c].second), widths[c]);
    }
    out += '\n';
  }
  return out;
}

std::string stats_json(const SplitStats& s) {
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  detail::OrderedJson j;
  j["num_imgs"] = s.num_imgs;
  j["num_imgs_with_occl"] = s.num_imgs_with_occl;
  j["img_occl_rate"] = ratio(static_cast<double>(s.num_imgs_with_occl), static_cast<double>(s.num_imgs));
  j["num_objs"] = s.num_objs;
  j["num_objs_occl"] = s.num_objs_occl;
  j["obj_occl_rate"] = ratio(static_cast<double>(s.num_objs_occl), static_cast<double>(s.num_objs));
  j["avg_or_per_region_all"] = ratio(s.occlusion_rate_sum, static_cast<double>(s.num_objs));
  j["avg_or_per_region_occl"] = ratio(s.occlusion_rate_sum, static_cast<double>(s.num_objs_occl));
  return j.dump(2) + "\n";
}

}  // namespace amodal
