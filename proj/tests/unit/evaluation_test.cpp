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

#include <gtest/gtest.h>

#include "amodal/error.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

namespace amodal {
namespace {

using testing::first_pixels;
using testing::make_annotation;
using testing::rect_mask;

constexpr int kH = 30;
constexpr int kW = 30;

Dataset one_image(std::vector<InstanceAnnotation> anns) {
  Dataset ds;
  ds.categories = {{1, "a", false}, {2, "b", false}};
  ImageRecord img{1, kW, kH, "", std::move(anns), std::nullopt, {}};
  ds.images.push_back(std::move(img));
  return ds;
}

Detection det(double score, const BinaryMask& amodal, std::optional<BinaryMask> visible = std::nullopt,
              std::optional<BinaryMask> invisible = std::nullopt, int category = 1) {
  return {1, category, score, amodal, std::move(visible), std::move(invisible)};
}

std::vector<Detection> verbatim(const Dataset& ds) {
  std::vector<Detection> out;
  for (const auto& img : ds.images) {
    for (const auto& a : img.annotations) {
      out.push_back({img.id, a.category_id, 0.9, a.amodal, a.visible,
                     a.invisible.value_or(BinaryMask::empty(a.amodal.height(), a.amodal.width()))});
    }
  }
  return out;
}

EvalConfig config(Metric metric) {
  EvalConfig c;
  c.metric = metric;
  return c;
}

// GT amodal 10x10; visible keeps the first 60 pixels.
InstanceAnnotation occluded_gt(long long id = 1) {
  return make_annotation(id, 1, 1, rect_mask(kH, kW, 0, 0, 10, 10), first_pixels(kH, kW, 0, 0, 10, 10, 60));
}

TEST(Match, IdenticalMasksAreTruePositive) {
  const Dataset ds = one_image({occluded_gt()});
  const auto dets = verbatim(ds);
  const InstanceAnnotation* g = &ds.images[0].annotations[0];
  const Detection* d = &dets[0];
  const auto labels = match_image(std::span(&g, 1), std::span(&d, 1), 0.5, config(Metric::kAmodal));
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].kind, MatchKind::kTruePositive);
  EXPECT_EQ(labels[0].gt_id, 1);
}

TEST(Match, StrictThresholdAtExactIou) {
  const Dataset ds = one_image({occluded_gt()});
  const Detection dt = det(0.5, first_pixels(kH, kW, 0, 0, 10, 10, 60));
  const InstanceAnnotation* g = &ds.images[0].annotations[0];
  const Detection* d = &dt;
  for (const double t : default_iou_thresholds()) {
    const auto labels = match_image(std::span(&g, 1), std::span(&d, 1), t, config(Metric::kAmodal));
    EXPECT_EQ(labels[0].kind, t < 0.6 ? MatchKind::kTruePositive : MatchKind::kFalsePositive) << t;
  }
  const EvalResult r = evaluate(ds, std::span(&dt, 1), config(Metric::kAmodal));
  ASSERT_TRUE(r.mean_ap);
  EXPECT_NEAR(*r.mean_ap, 0.2, 1e-12);
}

TEST(Match, OccludedOnlyIgnoresNonOccludedGroundTruth) {
  const BinaryMask square = rect_mask(kH, kW, 0, 0, 10, 10);
  const Dataset ds = one_image({make_annotation(1, 1, 1, square, square)});
  const Detection dt = det(0.8, first_pixels(kH, kW, 0, 0, 10, 10, 90));
  EvalConfig c = config(Metric::kAmodal);
  c.occluded_only = true;
  const InstanceAnnotation* g = &ds.images[0].annotations[0];
  const Detection* d = &dt;
  EXPECT_EQ(ignored_ground_truth(std::span(&g, 1), c), std::vector<bool>{true});
  EXPECT_EQ(match_image(std::span(&g, 1), std::span(&d, 1), 0.5, c)[0].kind, MatchKind::kIgnored);
  const EvalResult r = evaluate(ds, std::span(&dt, 1), c);
  EXPECT_EQ(r.ignored_ground_truths, 1u);
  EXPECT_FALSE(r.mean_ap.has_value());
}

TEST(Match, GreedyPrefersHigherScore) {
  const Dataset ds = one_image({occluded_gt()});
  const BinaryMask am = rect_mask(kH, kW, 0, 0, 10, 10);
  const std::vector<Detection> dets = {det(0.3, am), det(0.9, am)};
  const EvalResult r = evaluate(ds, dets, config(Metric::kAmodal));
  // The top-scored detection matches; the lower one is a trailing false positive.
  EXPECT_NEAR(*r.mean_ap, 1.0, 1e-12);
}

TEST(AveragePrecision, HandCases) {
  using K = MatchKind;
  const std::vector<K> perfect = {K::kTruePositive, K::kTruePositive};
  EXPECT_DOUBLE_EQ(*average_precision(perfect, 2), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision(std::vector<K>{K::kFalsePositive}, 1), 0.0);
  const std::vector<K> mixed = {K::kTruePositive, K::kFalsePositive, K::kTruePositive};
  // Recall 0.5 at precision 1 covers 51 sample points; 2/3 covers the other 50.
  EXPECT_NEAR(*average_precision(mixed, 2), (51.0 + 50.0 * 2.0 / 3.0) / 101.0, 1e-15);
  const std::vector<K> with_ignored = {K::kTruePositive, K::kIgnored, K::kFalsePositive, K::kTruePositive};
  EXPECT_DOUBLE_EQ(*average_precision(with_ignored, 2), *average_precision(mixed, 2));
  EXPECT_FALSE(average_precision(perfect, 0).has_value());
}

TEST(AveragePrecision, RecallCases) {
  using K = MatchKind;
  EXPECT_DOUBLE_EQ(*recall(std::vector<K>{K::kTruePositive, K::kTruePositive}, 2), 1.0);
  EXPECT_DOUBLE_EQ(*recall(std::vector<K>{}, 2), 0.0);
  EXPECT_DOUBLE_EQ(*recall(std::vector<K>{K::kFalsePositive, K::kTruePositive}, 2), 0.5);
}

TEST(Evaluate, VerbatimDetectionsScorePerfectly) {
  const BinaryMask square = rect_mask(kH, kW, 15, 15, 25, 25);
  const Dataset ds = one_image({occluded_gt(), make_annotation(2, 1, 2, square, square, 1)});
  const auto dets = verbatim(ds);
  for (const Metric m : {Metric::kAmodal, Metric::kVisible, Metric::kAmodalVisible}) {
    const EvalResult r = evaluate(ds, dets, config(m));
    EXPECT_DOUBLE_EQ(*r.mean_ap, 1.0) << metric_name(m);
    EXPECT_DOUBLE_EQ(*r.mean_ar, 1.0);
  }
}

TEST(Evaluate, HalfRecall) {
  const BinaryMask square = rect_mask(kH, kW, 15, 15, 25, 25);
  const Dataset ds = one_image({occluded_gt(), make_annotation(2, 1, 1, square, square, 1)});
  const Detection dt = det(0.7, square, square);
  const EvalResult r = evaluate(ds, std::span(&dt, 1), config(Metric::kAmodal));
  EXPECT_DOUBLE_EQ(*r.mean_ar, 0.5);
}

TEST(Evaluate, AmodalOnlyModelUnderJointMetric) {
  const Dataset ds = one_image({occluded_gt()});
  const Detection dt = det(0.9, rect_mask(kH, kW, 0, 0, 10, 10));
  const EvalResult r = evaluate(ds, std::span(&dt, 1), config(Metric::kAmodalVisible));
  EXPECT_NEAR(*r.mean_ap, 0.2, 1e-12);
  EXPECT_EQ(r.fallback_visible, 1u);
}

TEST(Evaluate, InvisibleAtHalfThreshold) {
  const Dataset ds = one_image({occluded_gt()});
  // 24 of the 40 hidden pixels: IoU 0.6.
  const BinaryMask hidden = *ds.images[0].annotations[0].invisible;
  const testing::Dense h = testing::to_dense(hidden);
  testing::Dense part(kH, kW);
  int kept = 0;
  for (int x = 0; x < kW && kept < 24; ++x) {
    for (int y = 0; y < kH && kept < 24; ++y) {
      if (h.at(x, y)) {
        part.set(x, y);
        ++kept;
      }
    }
  }
  ASSERT_DOUBLE_EQ(iou(testing::to_mask(part), hidden), 0.6);
  const Detection dt = det(0.9, rect_mask(kH, kW, 0, 0, 10, 10), std::nullopt, testing::to_mask(part));
  const EvalResult r = evaluate(ds, std::span(&dt, 1), config(Metric::kInvisible));
  EXPECT_TRUE(r.occluded_only);
  EXPECT_DOUBLE_EQ(*r.categories[0].ap, 1.0);
}

TEST(Evaluate, MaxDetectionsTruncatesPerImage) {
  const Dataset ds = one_image({occluded_gt()});
  const BinaryMask am = rect_mask(kH, kW, 0, 0, 10, 10);
  const std::vector<Detection> dets = {det(0.9, rect_mask(kH, kW, 20, 20, 25, 25)), det(0.5, am)};
  EvalConfig c = config(Metric::kAmodal);
  c.max_detections_per_image = 1;
  EXPECT_DOUBLE_EQ(*evaluate(ds, dets, c).mean_ap, 0.0);
  c.max_detections_per_image = 2;
  EXPECT_GT(*evaluate(ds, dets, c).mean_ap, 0.0);
}

TEST(Evaluate, UnknownCategoryIsConfigError) {
  const Dataset ds = one_image({occluded_gt()});
  const Detection dt = det(0.9, rect_mask(kH, kW, 0, 0, 10, 10), std::nullopt, std::nullopt, 7);
  try {
    evaluate(ds, std::span(&dt, 1), config(Metric::kAmodal));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
  EvalConfig agnostic = config(Metric::kAmodal);
  agnostic.class_agnostic = true;
  EXPECT_DOUBLE_EQ(*evaluate(ds, std::span(&dt, 1), agnostic).mean_ap, 1.0);
}

TEST(Evaluate, BadThresholdsRejected) {
  EvalConfig c;
  c.iou_thresholds = {0.7, 0.5};
  EXPECT_THROW(c.check(), Error);
}

TEST(Evaluate, MatchesOracleAndThreadCount) {
  Rng rng(21);
  const Metric metrics[] = {Metric::kAmodal, Metric::kVisible, Metric::kAmodalVisible,
                            Metric::kAmodalInvisibleVisible, Metric::kInvisible};
  for (int i = 0; i < 30; ++i) {
    const auto c = testing::random_micro_case(rng);
    for (const Metric m : metrics) {
      for (const bool occluded : {false, true}) {
        EvalConfig cfg = config(m);
        cfg.occluded_only = occluded;
        const EvalResult got = evaluate(c.gt, c.dets, cfg);
        const auto want = testing::oracle_evaluate(c.gt, c.dets, cfg);
        ASSERT_EQ(got.mean_ap.has_value(), want.mean_ap.has_value());
        if (want.mean_ap) {
          EXPECT_NEAR(*got.mean_ap, *want.mean_ap, 1e-9);
          EXPECT_NEAR(*got.mean_ar, *want.mean_ar, 1e-9);
        }
        EXPECT_EQ(eval_result_json(evaluate(c.gt, c.dets, cfg, 3)), eval_result_json(got));
      }
    }
  }
}

TEST(Detections, ParseJson) {
  const Dataset ds = one_image({occluded_gt()});
  const auto dets = parse_detections(
      R"([{"image_id": 1, "category_id": 1, "score": 0.25,
           "amodal_seg": [[0, 0, 10, 0, 10, 10, 0, 10]]}])",
      ds);
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].amodal, rect_mask(kH, kW, 0, 0, 10, 10));
  EXPECT_FALSE(dets[0].visible.has_value());
  EXPECT_THROW(parse_detections(R"([{"image_id": 4, "category_id": 1, "score": 1, "amodal_seg": []}])", ds),
               Error);
}

TEST(Metrics, NamesRoundTrip) {
  for (const Metric m : {Metric::kAmodal, Metric::kVisible, Metric::kAmodalVisible,
                         Metric::kAmodalInvisibleVisible, Metric::kInvisible}) {
    EXPECT_EQ(parse_metric(metric_name(m)), m);
  }
}

}  // namespace
}  // namespace amodal
