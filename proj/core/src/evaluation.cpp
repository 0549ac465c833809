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
#include "amodal/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "segmentation_json.hpp"

namespace amodal {

namespace {

// Detections overlapping an ignored ground truth this much are discarded.
constexpr double kIgnoreOverlap = 0.5;

bool needs_visible(Metric m) {
  return m == Metric::kVisible || m == Metric::kAmodalVisible ||
         m == Metric::kAmodalInvisibleVisible;
}

bool needs_invisible(Metric m) {
  return m == Metric::kInvisible || m == Metric::kAmodalInvisibleVisible;
}

bool needs_amodal(Metric m) {
  return m == Metric::kAmodal || m == Metric::kAmodalVisible ||
         m == Metric::kAmodalInvisibleVisible;
}

// Smallest IoU among the mask types the metric requires.
double match_quality(const IouTables& t, Metric metric, std::size_t d, std::size_t g) {
  double q = std::numeric_limits<double>::infinity();
  if (needs_amodal(metric)) q = std::min(q, t.at(t.amodal, d, g));
  if (needs_visible(metric)) q = std::min(q, t.at(t.visible, d, g));
  if (needs_invisible(metric)) q = std::min(q, t.at(t.invisible, d, g));
  return q;
}

}  // namespace

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "a" || name == "A") return Metric::kAmodal;
  if (name == "v" || name == "V") return Metric::kVisible;
  if (name == "av" || name == "AV") return Metric::kAmodalVisible;
  if (name == "aivv" || name == "AIVV") return Metric::kAmodalInvisibleVisible;
  if (name == "iv" || name == "IV") return Metric::kInvisible;
  return std::nullopt;
}

std::string_view metric_name(Metric metric) {
  switch (metric) {
    case Metric::kAmodal: return "A";
    case Metric::kVisible: return "V";
    case Metric::kAmodalVisible: return "AV";
    case Metric::kAmodalInvisibleVisible: return "AIVV";
    case Metric::kInvisible: return "IV";
  }
  return "?";
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

void EvalConfig::check() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::kConfigError, why); };
  if (iou_thresholds.empty()) bad("no IoU thresholds");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) bad("IoU threshold " + std::to_string(t) + " outside (0, 1]");
    if (i > 0 && !(t > iou_thresholds[i - 1])) bad("IoU thresholds must be strictly increasing");
  }
  if (!(iv_threshold > 0.0 && iv_threshold <= 1.0)) bad("iv_threshold outside (0, 1]");
  if (max_detections_per_image <= 0) bad("max_detections_per_image must be positive");
}

std::vector<double> EvalConfig::thresholds() const {
  if (metric == Metric::kInvisible) return {iv_threshold};
  return iou_thresholds;
}

IouTables compute_ious(std::span<const InstanceAnnotation* const> gts,
                       std::span<const Detection* const> dets, Metric metric) {
  IouTables t;
  t.num_dets = dets.size();
  t.num_gts = gts.size();
  const std::size_t n = t.num_dets * t.num_gts;
  t.amodal.resize(n);
  if (needs_visible(metric)) t.visible.resize(n);
  if (needs_invisible(metric)) t.invisible.resize(n);

  std::vector<BinaryMask> gt_invisible;
  if (needs_invisible(metric)) {
    for (const auto* g : gts) {
      gt_invisible.push_back(g->invisible ? *g->invisible
                                          : BinaryMask::empty(g->amodal.height(), g->amodal.width()));
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    const Detection& det = *dets[d];
    const BinaryMask& det_visible = det.visible ? *det.visible : det.amodal;
    const BinaryMask& det_invisible = det.invisible ? *det.invisible : det.amodal;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const std::size_t k = d * t.num_gts + g;
      t.amodal[k] = iou(det.amodal, gts[g]->amodal);
      if (needs_visible(metric)) t.visible[k] = iou(det_visible, gts[g]->visible);
      if (needs_invisible(metric)) t.invisible[k] = iou(det_invisible, gt_invisible[g]);
    }
  }
  return t;
}

std::vector<bool> ignored_ground_truth(std::span<const InstanceAnnotation* const> gts,
                                       const EvalConfig& config) {
  std::vector<bool> ignored(gts.size(), false);
  if (!config.evaluates_occluded_only()) return ignored;
  for (std::size_t g = 0; g < gts.size(); ++g) ignored[g] = !is_occluded(*gts[g]);
  return ignored;
}

std::vector<MatchLabel> match_image(std::span<const InstanceAnnotation* const> gts,
                                    std::span<const Detection* const> dets, double threshold,
                                    const EvalConfig& config) {
  return match_image(gts, dets, threshold, config, compute_ious(gts, dets, config.metric),
                     ignored_ground_truth(gts, config));
}

std::vector<MatchLabel> match_image(std::span<const InstanceAnnotation* const> gts,
                                    std::span<const Detection* const> dets, double threshold,
                                    const EvalConfig& config, const IouTables& ious,
                                    const std::vector<bool>& gt_ignored) {
  std::vector<MatchLabel> labels(dets.size());
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    std::size_t best = gts.size();
    double best_quality = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_ignored[g] || taken[g]) continue;
      const double q = match_quality(ious, config.metric, d, g);
      if (q > threshold && q > best_quality) {
        best = g;
        best_quality = q;
      }
    }
    if (best < gts.size()) {
      taken[best] = true;
      labels[d] = {MatchKind::kTruePositive, gts[best]->id};
      continue;
    }
    bool ignore = false;
    for (std::size_t g = 0; g < gts.size() && !ignore; ++g) {
      ignore = gt_ignored[g] && ious.at(ious.amodal, d, g) >= kIgnoreOverlap;
    }
    labels[d] = {ignore ? MatchKind::kIgnored : MatchKind::kFalsePositive, -1};
  }
  return labels;
}

std::vector<double> interpolated_precision(std::span<const MatchKind> ranked, std::size_t positives) {
  std::vector<double> precision;
  std::vector<double> recall_at;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const MatchKind k : ranked) {
    if (k == MatchKind::kIgnored) continue;
    if (k == MatchKind::kTruePositive) ++tp;
    else ++fp;
    recall_at.push_back(static_cast<double>(tp) / static_cast<double>(positives));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  std::vector<double> sampled(kRecallSamples, 0.0);
  for (int r = 0; r < kRecallSamples; ++r) {
    const double level = r / 100.0;
    auto it = std::lower_bound(recall_at.begin(), recall_at.end(), level);
    if (it != recall_at.end()) sampled[r] = precision[static_cast<std::size_t>(it - recall_at.begin())];
  }
  return sampled;
}

std::optional<double> average_precision(std::span<const MatchKind> ranked, std::size_t positives) {
  if (positives == 0) return std::nullopt;
  const auto sampled = interpolated_precision(ranked, positives);
  return std::accumulate(sampled.begin(), sampled.end(), 0.0) / kRecallSamples;
}

std::optional<double> recall(std::span<const MatchKind> ranked, std::size_t positives) {
  if (positives == 0) return std::nullopt;
  const auto tp = std::count(ranked.begin(), ranked.end(), MatchKind::kTruePositive);
  return static_cast<double>(tp) / static_cast<double>(positives);
}

namespace {

struct CategoryWork {
  int category_id = 0;
  // Per image (dataset order): ground truths and score-sorted detections.
  std::vector<std::vector<const InstanceAnnotation*>> gts;
  std::vector<std::vector<const Detection*>> dets;
};

struct CategoryOutcome {
  CategoryResult result;
  std::size_t ignored_gts = 0;
  std::vector<std::size_t> ignored_dets;
};

CategoryOutcome evaluate_category(const CategoryWork& work, const EvalConfig& config,
                                  const std::vector<double>& thresholds) {
  CategoryOutcome out;
  out.result.category_id = work.category_id;
  out.ignored_dets.assign(thresholds.size(), 0);

  struct Ranked {
    double score;
    std::size_t image;
    std::size_t index;
  };
  std::vector<Ranked> order;
  // labels[t][image][det]
  std::vector<std::vector<std::vector<MatchLabel>>> labels(
      thresholds.size(), std::vector<std::vector<MatchLabel>>(work.gts.size()));

  for (std::size_t im = 0; im < work.gts.size(); ++im) {
    const auto& gts = work.gts[im];
    const auto& dets = work.dets[im];
    if (gts.empty() && dets.empty()) continue;
    const IouTables ious = compute_ious(gts, dets, config.metric);
    const std::vector<bool> ignored = ignored_ground_truth(gts, config);
    const auto n_ignored = static_cast<std::size_t>(std::count(ignored.begin(), ignored.end(), true));
    out.ignored_gts += n_ignored;
    out.result.positives += gts.size() - n_ignored;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      labels[t][im] = match_image(gts, dets, thresholds[t], config, ious, ignored);
    }
    for (std::size_t d = 0; d < dets.size(); ++d) order.push_back({dets[d]->score, im, d});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  const std::size_t positives = out.result.positives;
  std::vector<MatchKind> ranked(order.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      ranked[k] = labels[t][order[k].image][order[k].index].kind;
      if (ranked[k] == MatchKind::kIgnored) ++out.ignored_dets[t];
    }
    if (positives == 0) continue;
    out.result.ap_per_threshold.push_back(*average_precision(ranked, positives));
    out.result.recall_per_threshold.push_back(*recall(ranked, positives));
    out.result.precision_curves.push_back(interpolated_precision(ranked, positives));
  }
  if (positives > 0) {
    const auto& ap = out.result.ap_per_threshold;
    const auto& ar = out.result.recall_per_threshold;
    out.result.ap = std::accumulate(ap.begin(), ap.end(), 0.0) / static_cast<double>(ap.size());
    out.result.ar = std::accumulate(ar.begin(), ar.end(), 0.0) / static_cast<double>(ar.size());
  }
  return out;
}

}  // namespace

EvalResult evaluate(const Dataset& ground_truth, std::span<const Detection> detections,
                    const EvalConfig& config, int threads) {
  config.check();
  EvalResult result;
  result.metric = config.metric;
  result.occluded_only = config.evaluates_occluded_only();
  result.class_agnostic = config.class_agnostic;
  result.thresholds = config.thresholds();

  std::map<long long, std::size_t> image_index;
  for (std::size_t i = 0; i < ground_truth.images.size(); ++i) {
    image_index[ground_truth.images[i].id] = i;
  }

  std::vector<CategoryWork> work;
  std::map<int, std::size_t> category_index;
  if (config.class_agnostic) {
    work.push_back({0, {}, {}});
  } else {
    for (const auto& c : ground_truth.categories) {
      category_index[c.id] = work.size();
      work.push_back({c.id, {}, {}});
    }
  }
  for (auto& w : work) {
    w.gts.resize(ground_truth.images.size());
    w.dets.resize(ground_truth.images.size());
  }
  auto slot = [&](int category_id) -> CategoryWork* {
    if (config.class_agnostic) return &work[0];
    auto it = category_index.find(category_id);
    return it == category_index.end() ? nullptr : &work[it->second];
  };

  for (std::size_t im = 0; im < ground_truth.images.size(); ++im) {
    for (const auto& a : ground_truth.images[im].annotations) {
      if (CategoryWork* w = slot(a.category_id)) w->gts[im].push_back(&a);
    }
  }
  for (const auto& det : detections) {
    CategoryWork* w = slot(det.category_id);
    if (w == nullptr) {
      throw Error(ErrorCode::kConfigError,
                  "detection has unknown category id " + std::to_string(det.category_id));
    }
    auto it = image_index.find(det.image_id);
    if (it == image_index.end()) {
      throw Error(ErrorCode::kConfigError,
                  "detection has unknown image id " + std::to_string(det.image_id));
    }
    w->dets[it->second].push_back(&det);
  }
  for (auto& w : work) {
    for (auto& dets : w.dets) {
      std::stable_sort(dets.begin(), dets.end(),
                       [](const Detection* a, const Detection* b) { return a->score > b->score; });
      if (dets.size() > static_cast<std::size_t>(config.max_detections_per_image)) {
        dets.resize(static_cast<std::size_t>(config.max_detections_per_image));
      }
      for (const Detection* d : dets) {
        ++result.detections_evaluated;
        if (needs_visible(config.metric) && !d->visible) ++result.fallback_visible;
        if (needs_invisible(config.metric) && !d->invisible) ++result.fallback_invisible;
      }
    }
  }

  std::vector<CategoryOutcome> outcomes(work.size());
  const std::size_t workers =
      std::min(static_cast<std::size_t>(std::max(threads, 1)), work.size());
  if (workers <= 1) {
    for (std::size_t c = 0; c < work.size(); ++c) {
      outcomes[c] = evaluate_category(work[c], config, result.thresholds);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < work.size(); c = next++) {
          outcomes[c] = evaluate_category(work[c], config, result.thresholds);
        }
      });
    }
  }

  result.ignored_detections_per_threshold.assign(result.thresholds.size(), 0);
  double ap_sum = 0.0;
  double ar_sum = 0.0;
  std::size_t defined = 0;
  for (auto& outcome : outcomes) {
    result.ignored_ground_truths += outcome.ignored_gts;
    for (std::size_t t = 0; t < outcome.ignored_dets.size(); ++t) {
      result.ignored_detections_per_threshold[t] += outcome.ignored_dets[t];
    }
    if (outcome.result.ap) {
      ap_sum += *outcome.result.ap;
      ar_sum += *outcome.result.ar;
      ++defined;
    }
    result.categories.push_back(std::move(outcome.result));
  }
  if (defined > 0) {
    result.mean_ap = ap_sum / static_cast<double>(defined);
    result.mean_ar = ar_sum / static_cast<double>(defined);
  }
  return result;
}

std::string eval_result_json(const EvalResult& result) {
  using detail::OrderedJson;
  auto opt = [](const std::optional<double>& v) { return v ? OrderedJson(*v) : OrderedJson(nullptr); };
  OrderedJson j;
  j["metric"] = metric_name(result.metric);
  j["occluded_only"] = result.occluded_only;
  j["class_agnostic"] = result.class_agnostic;
  j["thresholds"] = result.thresholds;
  j["mean_ap"] = opt(result.mean_ap);
  j["mean_ar"] = opt(result.mean_ar);
  j["ignored_ground_truths"] = result.ignored_ground_truths;
  j["ignored_detections_per_threshold"] = result.ignored_detections_per_threshold;
  j["detections_evaluated"] = result.detections_evaluated;
  j["fallback_visible"] = result.fallback_visible;
  j["fallback_invisible"] = result.fallback_invisible;
  OrderedJson cats = OrderedJson::array();
  for (const auto& c : result.categories) {
    OrderedJson cj;
    cj["category_id"] = c.category_id;
    cj["positives"] = c.positives;
    cj["ap"] = opt(c.ap);
    cj["ar"] = opt(c.ar);
    cj["ap_per_threshold"] = c.ap_per_threshold;
    cj["recall_per_threshold"] = c.recall_per_threshold;
    cats.push_back(std::move(cj));
  }
  j["categories"] = std::move(cats);
  return j.dump(2) + "\n";
}

std::vector<Detection> parse_detections(std::string_view json_text, const Dataset& ground_truth) {
  const detail::Json root = detail::parse_json_text(json_text);
  if (!root.is_array()) throw Error(ErrorCode::kParseError, "detections must be a JSON array");
  std::vector<Detection> out;
  out.reserve(root.size());
  try {
    for (const auto& j : root) {
      Detection d;
      d.image_id = j.at("image_id").get<long long>();
      d.category_id = j.at("category_id").get<int>();
      d.score = j.at("score").get<double>();
      const ImageRecord* image = ground_truth.find_image(d.image_id);
      if (image == nullptr) {
        throw Error(ErrorCode::kParseError,
                    "detection refers to unknown image " + std::to_string(d.image_id));
      }
      const int h = image->canvas_height();
      const int w = image->canvas_width();
      const double sx = image->canvas_margin.left;
      const double sy = image->canvas_margin.top;
      auto seg = [&](const char* key) -> std::optional<BinaryMask> {
        auto it = j.find(key);
        if (it == j.end()) return std::nullopt;
        return detail::parse_segmentation(*it, h, w, sx, sy);
      };
      auto amodal = seg("amodal_seg");
      if (!amodal) throw Error(ErrorCode::kParseError, "detection without amodal_seg");
      d.amodal = std::move(*amodal);
      d.visible = seg("visible_seg");
      d.invisible = seg("invisible_seg");
      out.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
  return out;
}

std::vector<Detection> load_detections(const std::filesystem::path& path, const Dataset& ground_truth) {
  return parse_detections(read_text_file(path), ground_truth);
}

}  // namespace amodal
