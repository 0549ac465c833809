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

#include <cstdint>
#include <vector>

#include "amodal/mask.hpp"
#include "amodal/orcnn/model.hpp"

namespace amodal::orcnn {

inline constexpr int kFeatureChannels = 8;
inline constexpr int kShapeClasses = 2;  // 0 rectangle, 1 disk

// One RoI: a target shape framed by its (slightly enlarged) amodal box and a
// rectangular occluder in front of it. All masks are M x M.
struct ShapeScene {
  int shape_class = 0;
  BinaryMask amodal;
  BinaryMask visible;
  BinaryMask occluder;
  BoundingBox box;  // amodal box inside the RoI grid
};

struct CorpusConfig {
  int size = 200;
  int roi_size = 14;
  std::uint64_t seed = 0;
};

// Scene i depends only on (seed, i).
std::vector<ShapeScene> generate_scenes(const CorpusConfig& config);

// Deterministic featurizer. Channels: visible rectangle pixels, visible disk
// pixels, occluder, x coordinate, y coordinate, visible pixels, constant one,
// background.
RoiSample featurize(const ShapeScene& scene);

std::vector<RoiSample> make_corpus(const CorpusConfig& config);

// Row-major [H, W] tensor <-> binary mask.
Tensor mask_to_tensor(const BinaryMask& mask);
BinaryMask tensor_to_mask(const Tensor& plane, double threshold = 0.0);

}  // namespace amodal::orcnn
