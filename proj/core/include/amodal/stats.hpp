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
#pragma once

#include <string>
#include <vector>

#include "amodal/dataset.hpp"

namespace amodal {

// Occlusion statistics of one split. Percent fields are unrounded.
struct SplitStats {
  std::size_t num_imgs = 0;
  std::size_t num_imgs_with_occl = 0;
  double img_occl_rate = 0.0;  // percent
  std::size_t num_objs = 0;
  std::size_t num_objs_occl = 0;
  double obj_occl_rate = 0.0;  // percent
  double avg_or_per_region_all = 0.0;   // percent
  double avg_or_per_region_occl = 0.0;  // percent
  // Sum of per-object occlusion rates in [0, 1]; kept so splits can merge.
  double occlusion_rate_sum = 0.0;
};

SplitStats compute_stats(const Dataset& dataset);

// Statistics of the union of two disjoint splits.
SplitStats merge(const SplitStats& a, const SplitStats& b);

// Fixed-width table with percentages rounded to integers. Each column is one
// named split.
std::string stats_table(const std::vector<std::pair<std::string, SplitStats>>& columns);

// Counts plus ratios in [0, 1] at full precision.
std::string stats_json(const SplitStats& stats);

}  // namespace amodal
