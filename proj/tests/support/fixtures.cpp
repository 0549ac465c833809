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
#include "fixtures.hpp"

#include <algorithm>

#include "oracle.hpp"

namespace amodal::testing {

BinaryMask first_pixels(int h, int w, int x0, int y0, int x1, int y1, int n) {
  Dense d(h, w);
  for (int x = x0; x < x1 && n > 0; ++x) {
    for (int y = y0; y < y1 && n > 0; ++y, --n) d.set(x, y);
  }
  return to_mask(d);
}

namespace {

Category cat(int id, const char* name) { return {id, name, false}; }

}  // namespace

Dataset stats_fixture() {
  Dataset ds;
  ds.categories = {cat(1, "thing")};
  ds.split_name = "fixture";
  const int h = 40, w = 40;
  ImageRecord a{1, w, h, "a.png", {}, std::nullopt, {}};
  // Amodal 10x10; the bottom 2 and 4 rows are hidden behind object 3.
  a.annotations.push_back(make_annotation(1, 1, 1, rect_mask(h, w, 0, 0, 10, 10),
                                          rect_mask(h, w, 0, 0, 10, 8), 1));
  a.annotations.push_back(make_annotation(2, 1, 1, rect_mask(h, w, 20, 0, 30, 10),
                                          rect_mask(h, w, 20, 0, 30, 6), 1));
  a.annotations.push_back(make_annotation(3, 1, 1, to_mask(dense_or(to_dense(rect_mask(h, w, 0, 8, 10, 12)),
                                                                    to_dense(rect_mask(h, w, 20, 6, 30, 12)))),
                                          to_mask(dense_or(to_dense(rect_mask(h, w, 0, 8, 10, 12)),
                                                           to_dense(rect_mask(h, w, 20, 6, 30, 12)))),
                                          0));
  ImageRecord b{2, w, h, "b.png", {}, std::nullopt, {}};
  b.annotations.push_back(make_annotation(4, 2, 1, rect_mask(h, w, 5, 5, 15, 15), rect_mask(h, w, 5, 5, 15, 15)));
  ImageRecord c{3, w, h, "c.png", {}, std::nullopt, {}};
  c.annotations.push_back(make_annotation(5, 3, 1, rect_mask(h, w, 2, 2, 8, 8), rect_mask(h, w, 2, 2, 8, 8)));
  ds.images = {a, b, c};
  return ds;
}

MergeFixture merge_fixture(bool second_candidate) {
  const int h = 40, w = 40;
  MergeFixture f;
  f.amodal.categories = {cat(1, "object")};
  f.modal.categories = {cat(1, "person"), cat(2, "car")};
  ImageRecord am{7, w, h, "x.png", {}, std::nullopt, {}};
  ImageRecord mo{7, w, h, "x.png", {}, std::nullopt, {}};
  auto modal_ann = [&](long long id, int category, const BinaryMask& m) {
    mo.annotations.push_back(make_annotation(id, 7, category, m, m));
  };
  auto amodal_ann = [&](long long id, const BinaryMask& m) {
    am.annotations.push_back(make_annotation(id, 7, 1, m, m));
  };
  // IoU = |subset| / |square| for a subset of a 10x10 square.
  modal_ann(10, 1, rect_mask(h, w, 0, 0, 10, 10));
  amodal_ann(1, first_pixels(h, w, 0, 0, 10, 10, 76));
  modal_ann(11, 2, rect_mask(h, w, 15, 0, 25, 10));
  amodal_ann(2, first_pixels(h, w, 15, 0, 25, 10, 74));
  modal_ann(12, 1, rect_mask(h, w, 0, 20, 10, 30));
  amodal_ann(3, first_pixels(h, w, 0, 20, 10, 30, 90));
  amodal_ann(4, first_pixels(h, w, 0, 20, 10, 30, 80));
  if (second_candidate) {
    // 64 pixels inside annotation 4: IoU 0.8 with it, at most 64/90 with 3.
    modal_ann(13, 2, first_pixels(h, w, 0, 20, 10, 30, 64));
  }
  f.amodal.images = {am};
  f.modal.images = {mo};
  return f;
}

Dataset padding_fixture() {
  Dataset ds;
  ds.categories = {cat(1, "thing")};
  ImageRecord img{1, 20, 20, "p.png", {}, std::nullopt, {}};
  img.canvas_margin = {0, 0, 10, 0};
  const int ch = img.canvas_height(), cw = img.canvas_width();
  // Hidden part beyond the right border.
  img.annotations.push_back(make_annotation(1, 1, 1, rect_mask(ch, cw, 12, 4, 27, 12),
                                            rect_mask(ch, cw, 12, 4, 20, 12)));
  img.annotations.push_back(make_annotation(2, 1, 1, rect_mask(ch, cw, 3, 3, 14, 16),
                                            rect_mask(ch, cw, 3, 3, 14, 16)));
  ds.images = {img};
  return ds;
}

Dataset random_scene_dataset(Rng& rng, int n_images) {
  Dataset ds;
  ds.categories = {cat(1, "a"), cat(2, "b"), {3, "ground", true}};
  ds.split_name = "random";
  long long next_id = 1;
  for (int i = 0; i < n_images; ++i) {
    ImageRecord img;
    img.id = 100 + i;
    img.width = 16 + static_cast<int>(rng.below(25));
    img.height = 16 + static_cast<int>(rng.below(25));
    img.file_name = "img" + std::to_string(i) + ".png";
    const int h = img.height, w = img.width;
    const int n = 1 + static_cast<int>(rng.below(4));
    // Front-most first; each object is hidden by the union of those in front.
    Dense front(h, w);
    for (int k = 0; k < n; ++k) {
      const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - 3)));
      const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - 3)));
      const int x1 = std::min(w, x0 + 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w / 2))));
      const int y1 = std::min(h, y0 + 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h / 2))));
      Dense am = to_dense(rect_mask(h, w, x0, y0, x1, y1));
      if (rng.chance(0.3)) am = dense_minus(am, to_dense(rect_mask(h, w, x0, y0, x0 + 1, y0 + 1)));
      Dense vis = dense_minus(am, front);
      if (dense_area(vis) == 0) continue;
      InstanceAnnotation a = make_annotation(next_id++, img.id, 1 + static_cast<int>(rng.below(2)), to_mask(am),
                                             to_mask(vis), k);
      a.is_crowd = rng.chance(0.05);
      img.annotations.push_back(std::move(a));
      front = dense_or(front, am);
    }
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string native_fixture_json() {
  // Image 1 (4x4): annotation 1 fully visible, annotation 2 hidden in the
  // bottom row. Image 2 (3x3): annotation 3 as a polygon.
  return R"({
  "categories": [{"id": 1, "name": "box"}, {"id": 2, "name": "ball"}],
  "images": [
    {"id": 1, "width": 4, "height": 4, "file_name": "one.png"},
    {"id": 2, "width": 3, "height": 3, "file_name": "two.png"}
  ],
  "annotations": [
    {"id": 1, "image_id": 1, "category_id": 1, "depth_order": 0,
     "amodal_seg": {"size": [4, 4], "counts": [0, 2, 2, 2, 10]},
     "visible_seg": {"size": [4, 4], "counts": [0, 2, 2, 2, 10]}},
    {"id": 2, "image_id": 1, "category_id": 2, "depth_order": 1,
     "amodal_seg": {"size": [4, 4], "counts": [10, 2, 2, 2]},
     "visible_seg": {"size": [4, 4], "counts": [10, 1, 3, 1, 1]},
     "invisible_seg": {"size": [4, 4], "counts": [11, 1, 3, 1]}},
    {"id": 3, "image_id": 2, "category_id": 1,
     "amodal_seg": [[0, 0, 2, 0, 2, 2, 0, 2]],
     "visible_seg": [[0, 0, 2, 0, 2, 2, 0, 2]]}
  ]
})";
}

}  // namespace amodal::testing
