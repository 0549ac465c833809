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

#include "amodal/dataset.hpp"
#include "amodal/rng.hpp"
#include "amodal/synthesis.hpp"

namespace amodal::testing {

// First n pixels of the rectangle [x0, x1) x [y0, y1) in column-major order.
BinaryMask first_pixels(int h, int w, int x0, int y0, int x1, int y1, int n);

// 3 images, 5 objects; image 1 holds two occluded objects with occlusion
// rates 0.2 and 0.4.
Dataset stats_fixture();

// Amodal/modal pair on one 40x40 image. Amodal annotations 1..4 have
// visible-mask IoU 0.76, 0.74, 0.9 and 0.8 with their best modal object;
// 3 and 4 compete for the same modal object (category 1). Modal object 13
// (category 2) overlaps annotation 4 at IoU 0.8 only when `second_candidate`.
struct MergeFixture {
  Dataset amodal;
  Dataset modal;
};
MergeFixture merge_fixture(bool second_candidate);

// 20x20 image whose canvas extends 10 px to the right; one amodal mask ends
// 7 px past the right border, another is inside.
Dataset padding_fixture();

// Random images with 1-4 rectangle or blob objects layered by depth.
Dataset random_scene_dataset(Rng& rng, int n_images);

// Two images and three annotations in the native format.
std::string native_fixture_json();

}  // namespace amodal::testing
