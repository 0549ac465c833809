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
#include "amodal/synthesis.hpp"

#include <gtest/gtest.h>

#include <map>

#include "amodal/error.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

namespace amodal {
namespace {

using testing::Dense;
using testing::make_annotation;
using testing::rect_mask;
using testing::to_dense;
using testing::to_mask;

constexpr int kS = 40;

ImageRecord base_image() {
  ImageRecord img{1, kS, kS, "base.png", {}, std::nullopt, {}};
  const BinaryMask square = rect_mask(kS, kS, 0, 0, 10, 10);
  img.annotations.push_back(make_annotation(1, 1, 1, square, square));
  return img;
}

// Donor whose box spans the whole source image, so the only placement
// inside a same-sized base is the zero offset.
Donor pinned_donor(const Dense& body) {
  Dense d = body;
  d.set(kS - 1, 0);
  d.set(0, kS - 1);
  d.set(kS - 1, kS - 1);
  const BinaryMask m = to_mask(d);
  return {make_annotation(50, 9, 2, m, m), 9, kS, kS, {}};
}

TEST(PasteAugment, DonorAwayFromObjectsLeavesThemVisible) {
  const Donor donor = pinned_donor(to_dense(rect_mask(kS, kS, 20, 20, 30, 30)));
  Rng rng(1);
  const PasteResult r = paste_augment(base_image(), std::span(&donor, 1), {}, rng);
  ASSERT_EQ(r.image.annotations.size(), 2u);
  const auto& old = r.image.annotations[0];
  EXPECT_EQ(old.visible, old.amodal);
  EXPECT_EQ(old.depth_order, 1);
  const auto& pasted = r.image.annotations[1];
  EXPECT_EQ(pasted.visible, pasted.amodal);
  EXPECT_FALSE(pasted.invisible.has_value());
  EXPECT_EQ(pasted.depth_order, 0);
  EXPECT_EQ(pasted.category_id, 2);
  ASSERT_EQ(r.composites.size(), 1u);
  EXPECT_EQ(r.composites[0], (CompositeEntry{1, 50, 9, 0, 0, 0}));
}

TEST(PasteAugment, HalfCoveredObject) {
  const Donor donor = pinned_donor(to_dense(rect_mask(kS, kS, 0, 0, 5, 10)));
  Rng rng(1);
  const PasteResult r = paste_augment(base_image(), std::span(&donor, 1), {}, rng);
  const auto& old = r.image.annotations[0];
  EXPECT_DOUBLE_EQ(occlusion_rate(old), 0.5);
  EXPECT_EQ(old.amodal, rect_mask(kS, kS, 0, 0, 10, 10));
  EXPECT_TRUE(check_dataset(Dataset{{{1, "a", false}, {2, "b", false}}, {r.image}, ""}).ok());
}

TEST(PasteAugment, DropsMostlyCoveredObject) {
  const Donor donor = pinned_donor(to_dense(testing::first_pixels(kS, kS, 0, 0, 10, 10, 95)));
  AugmentConfig cfg;
  cfg.min_remaining_visible_fraction = 0.1;
  Rng rng(1);
  const PasteResult r = paste_augment(base_image(), std::span(&donor, 1), cfg, rng);
  ASSERT_EQ(r.image.annotations.size(), 1u);
  EXPECT_EQ(r.image.annotations[0].category_id, 2);
  cfg.min_remaining_visible_fraction = 0.0;
  Rng again(1);
  EXPECT_EQ(paste_augment(base_image(), std::span(&donor, 1), cfg, again).image.annotations.size(), 2u);
}

TEST(PasteAugment, OversizedDonorHasNoPlacement) {
  Donor donor = pinned_donor(Dense(kS, kS));
  ImageRecord small{1, 10, 10, "", {}, std::nullopt, {}};
  Rng rng(1);
  try {
    paste_augment(small, std::span(&donor, 1), {}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoValidPlacement);
  }
}

TEST(PasteAugment, AnyPlacementKeepsAFootprintInImage) {
  const BinaryMask blob = rect_mask(kS, kS, 10, 10, 16, 14);
  const Donor donor{make_annotation(7, 3, 1, blob, blob), 3, kS, kS, {}};
  AugmentConfig cfg;
  cfg.placement = Placement::kUniformAny;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const PasteResult r = paste_augment(base_image(), std::span(&donor, 1), cfg, rng);
    EXPECT_FALSE(r.image.annotations.back().visible.is_empty());
    const int dx = r.composites[0].dx, dy = r.composites[0].dy;
    EXPECT_TRUE(dx > -16 && dx < kS - 10 && dy > -14 && dy < kS - 10);
  }
}

Dataset single_object_modal(Rng& rng) {
  Dataset ds;
  ds.categories = {{1, "a", false}};
  for (int i = 0; i < 5; ++i) {
    ImageRecord img{i + 1, 30, 30, "", {}, std::nullopt, {}};
    const int x = 1 + static_cast<int>(rng.below(15)), y = 1 + static_cast<int>(rng.below(15));
    const BinaryMask m = rect_mask(30, 30, x, y, x + 8, y + 6);
    img.annotations.push_back(make_annotation(i + 1, i + 1, 1, m, m));
    ds.images.push_back(std::move(img));
  }
  return ds;
}

TEST(BuildAugmented, EmptyRequest) {
  Rng rng(1);
  const auto r = build_modal_aug(single_object_modal(rng), {}, 0);
  EXPECT_TRUE(r.dataset.images.empty());
  EXPECT_TRUE(r.composites.empty());
}

TEST(BuildAugmented, ModalSourceProducesConsistentOcclusion) {
  Rng rng(2);
  const Dataset modal = single_object_modal(rng);
  AugmentConfig cfg;
  cfg.rng_seed = 17;
  const auto r = build_modal_aug(modal, cfg, 40);
  ASSERT_EQ(r.dataset.images.size(), 40u);
  EXPECT_TRUE(check_dataset(r.dataset).ok());
  for (const auto& img : r.dataset.images) {
    ASSERT_EQ(img.annotations.size(), 2u);
    for (const auto& a : img.annotations) {
      const Dense hidden = a.invisible ? to_dense(*a.invisible) : Dense(30, 30);
      EXPECT_EQ(testing::dense_or(to_dense(a.visible), hidden), to_dense(a.amodal));
    }
  }
}

TEST(BuildAugmented, DeterministicAcrossRunsAndThreads) {
  Rng rng(3);
  const Dataset src = testing::random_scene_dataset(rng, 6);
  AugmentConfig cfg;
  cfg.rng_seed = 99;
  cfg.donors_per_image = 2;
  const auto a = build_augmented(src, cfg, 25, false, 1);
  const auto b = build_augmented(src, cfg, 25, false, 4);
  EXPECT_EQ(to_native_json(a.dataset), to_native_json(b.dataset));
  EXPECT_EQ(composites_json(a.composites), composites_json(b.composites));
  cfg.rng_seed = 100;
  EXPECT_NE(to_native_json(build_augmented(src, cfg, 25, false, 1).dataset), to_native_json(a.dataset));
}

TEST(BuildAugmented, DonorsComeFromOtherImagesAndAreEligible) {
  Rng rng(8);
  const Dataset src = testing::random_scene_dataset(rng, 8);
  std::map<long long, const InstanceAnnotation*> by_id;
  std::map<long long, const ImageRecord*> image_of;
  for (const auto& img : src.images) {
    for (const auto& a : img.annotations) {
      by_id[a.id] = &a;
      image_of[a.id] = &img;
    }
  }
  AugmentConfig cfg;
  cfg.rng_seed = 5;
  const auto r = build_augmented(src, cfg, 30, false);
  for (const auto& c : r.composites) {
    const InstanceAnnotation* a = by_id.at(c.donor_annotation_id);
    EXPECT_FALSE(a->is_crowd);
    EXPECT_EQ(image_of.at(a->id)->id, c.donor_source_image);
    const BoundingBox b = bounding_box(a->amodal);
    const ImageRecord& srcimg = *image_of.at(a->id);
    EXPECT_TRUE(b.x0 > 0 && b.y0 > 0 && b.x1 < srcimg.width && b.y1 < srcimg.height);
  }
}

TEST(Padding, InBoundsIsIdentityWithZeroMetadata) {
  const Dataset ds = testing::stats_fixture();
  const Dataset padded = pad_dataset_for_amodal(ds);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    EXPECT_EQ(padded.images[i].padding, Margins{});
    EXPECT_EQ(padded.images[i].annotations, ds.images[i].annotations);
  }
}

TEST(Padding, GrowsExactlyToFit) {
  const Dataset ds = testing::padding_fixture();
  const Dataset padded = pad_dataset_for_amodal(ds);
  const ImageRecord& img = padded.images[0];
  EXPECT_EQ(img.padding, (Margins{0, 0, 7, 0}));
  EXPECT_EQ(img.width, 27);
  EXPECT_EQ(img.height, 20);
  EXPECT_TRUE(img.canvas_margin.is_zero());
  EXPECT_TRUE(check_dataset(padded).ok());
  const auto& a = ds.images[0].annotations;
  const auto& b = img.annotations;
  EXPECT_DOUBLE_EQ(iou(b[0].amodal, b[1].amodal), iou(a[0].amodal, a[1].amodal));
  EXPECT_EQ(b[0].amodal.area(), a[0].amodal.area());
  // Padding an already padded dataset changes nothing further.
  EXPECT_EQ(pad_dataset_for_amodal(padded), padded);
}

TEST(Merge, ThresholdAndGreedyUniqueness) {
  const auto f = testing::merge_fixture(false);
  const Dataset out = merge_categories(f.amodal, f.modal, {});
  std::map<long long, int> kept;
  for (const auto& a : out.images[0].annotations) kept[a.id] = a.category_id;
  EXPECT_EQ(kept, (std::map<long long, int>{{1, 1}, {3, 1}}));
  EXPECT_EQ(out.categories, f.modal.categories);
}

TEST(Merge, SecondCandidateRescuesLoser) {
  const auto f = testing::merge_fixture(true);
  const Dataset out = merge_categories(f.amodal, f.modal, {});
  std::map<long long, int> kept;
  for (const auto& a : out.images[0].annotations) kept[a.id] = a.category_id;
  EXPECT_EQ(kept, (std::map<long long, int>{{1, 1}, {3, 1}, {4, 2}}));
}

TEST(Merge, MissingImageIsMismatch) {
  auto f = testing::merge_fixture(false);
  f.modal.images[0].id = 8;
  try {
    merge_categories(f.amodal, f.modal, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImageIdMismatch);
  }
}

TEST(Merge, StuffAndCrowdExcluded) {
  auto f = testing::merge_fixture(false);
  f.modal.categories[0].is_stuff = true;
  EXPECT_EQ(merge_categories(f.amodal, f.modal, {}).annotation_count(), 0u);
  MergeConfig keep;
  keep.drop_stuff = false;
  EXPECT_EQ(merge_categories(f.amodal, f.modal, keep).annotation_count(), 2u);
}

TEST(Placement, NamesRoundTrip) {
  for (const Placement p : {Placement::kUniformInside, Placement::kUniformAny}) {
    EXPECT_EQ(parse_placement(placement_name(p)), p);
  }
}

}  // namespace
}  // namespace amodal
