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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/dataset.hpp"
#include "amodal/mask.hpp"

namespace amodal {

// Raw model output. No consistency between the masks is assumed.
struct Detection {
  long long image_id = 0;
  int category_id = 0;
  double score = 0.0;
  BinaryMask amodal;
  std::optional<BinaryMask> visible;
  std::optional<BinaryMask> invisible;
};

enum class Metric {
  kAmodal,                  // A
  kVisible,                 // V
  kAmodalVisible,           // AV
  kAmodalInvisibleVisible,  // AIVV
  kInvisible,               // IV, single threshold, occluded ground truth only
};

std::optional<Metric> parse_metric(std::string_view name);
std::string_view metric_name(Metric metric);

// 0.50, 0.55, ..., 0.95
std::vector<double> default_iou_thresholds();

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  int max_detections_per_image = 100;
  Metric metric = Metric::kAmodalVisible;
  bool occluded_only = false;
  bool class_agnostic = false;
  double iv_threshold = 0.5;

  // Throws ConfigError when thresholds are not strictly increasing in (0, 1].
  void check() const;
  bool evaluates_occluded_only() const noexcept {
    return occluded_only || metric == Metric::kInvisible;
  }
  std::vector<double> thresholds() const;
};

enum class MatchKind { kTruePositive, kFalsePositive, kIgnored };

struct MatchLabel {
  MatchKind kind = MatchKind::kFalsePositive;
  long long gt_id = -1;  // set for true positives
};

// Pairwise IoUs between the detections and ground truths of one image and
// category, for each mask type, with fallbacks already applied.
struct IouTables {
  std::size_t num_dets = 0;
  std::size_t num_gts = 0;
  std::vector<double> amodal;     // num_dets x num_gts, row-major
  std::vector<double> visible;
  std::vector<double> invisible;

  double at(const std::vector<double>& table, std::size_t d, std::size_t g) const {
    return table[d * num_gts + g];
  }
};

// Only the tables the metric needs are filled, plus amodal (always needed
// for the ignore rule). A ground truth without an invisible mask is compared
// as empty; a detection without visible/invisible masks falls back to its
// amodal mask.
IouTables compute_ious(std::span<const InstanceAnnotation* const> gts,
                       std::span<const Detection* const> dets, Metric metric);

// Marks ground truths that are excluded from matching.
std::vector<bool> ignored_ground_truth(std::span<const InstanceAnnotation* const> gts,
                                       const EvalConfig& config);

// Greedy score-order matching for one image and category. Detections must
// already be sorted by descending score. Each ground truth is matched at most
// once; a detection takes the unmatched, non-ignored ground truth whose
// weakest required IoU is largest, provided every required IoU exceeds t.
// Unmatched detections whose amodal IoU with an ignored ground truth is at
// least 0.5 are labeled ignored.
std::vector<MatchLabel> match_image(std::span<const InstanceAnnotation* const> gts,
                                    std::span<const Detection* const> dets, double threshold,
                                    const EvalConfig& config);
std::vector<MatchLabel> match_image(std::span<const InstanceAnnotation* const> gts,
                                    std::span<const Detection* const> dets, double threshold,
                                    const EvalConfig& config, const IouTables& ious,
                                    const std::vector<bool>& gt_ignored);

inline constexpr int kRecallSamples = 101;

// Precision envelope sampled at recall 0.00, 0.01, ..., 1.00.
std::vector<double> interpolated_precision(std::span<const MatchKind> ranked, std::size_t positives);

// 101-point interpolated AP over labels in global score order; ignored
// labels are dropped. nullopt when there are no positives.
std::optional<double> average_precision(std::span<const MatchKind> ranked, std::size_t positives);

// Fraction of positives matched; nullopt when there are no positives.
std::optional<double> recall(std::span<const MatchKind> ranked, std::size_t positives);

struct CategoryResult {
  int category_id = 0;
  std::size_t positives = 0;
  std::optional<double> ap;
  std::optional<double> ar;
  std::vector<double> ap_per_threshold;       // empty when undefined
  std::vector<double> recall_per_threshold;
  std::vector<std::vector<double>> precision_curves;  // [threshold][101]
};

struct EvalResult {
  Metric metric = Metric::kAmodalVisible;
  bool occluded_only = false;
  bool class_agnostic = false;
  std::vector<double> thresholds;
  std::vector<CategoryResult> categories;
  std::optional<double> mean_ap;
  std::optional<double> mean_ar;
  std::size_t ignored_ground_truths = 0;
  std::vector<std::size_t> ignored_detections_per_threshold;
  std::size_t detections_evaluated = 0;
  // Detections whose missing visible/invisible mask was replaced by amodal.
  std::size_t fallback_visible = 0;
  std::size_t fallback_invisible = 0;
};

// Runs the requested metric over the whole dataset. Detections for unknown
// categories raise ConfigError unless class_agnostic. Categories are
// processed independently on up to `threads` workers; the result does not
// depend on the worker count.
EvalResult evaluate(const Dataset& ground_truth, std::span<const Detection> detections,
                    const EvalConfig& config, int threads = 1);

std::string eval_result_json(const EvalResult& result);
std::vector<Detection> parse_detections(std::string_view json_text, const Dataset& ground_truth);
std::vector<Detection> load_detections(const std::filesystem::path& path, const Dataset& ground_truth);

}  // namespace amodal
