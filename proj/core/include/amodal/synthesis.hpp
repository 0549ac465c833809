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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/dataset.hpp"
#include "amodal/rng.hpp"

namespace amodal {

enum class Placement {
  kUniformInside,  // donor box entirely inside the image
  kUniformAny,     // any offset leaving at least one donor pixel in the image
};

std::optional<Placement> parse_placement(std::string_view name);
std::string_view placement_name(Placement placement);

struct AugmentConfig {
  std::uint64_t rng_seed = 0;
  int donors_per_image = 1;
  Placement placement = Placement::kUniformInside;
  // Skip donors whose amodal box touches or crosses their source image border.
  bool exclude_boundary_objects = true;
  // Occluded objects keeping less than this fraction of their amodal area
  // visible are removed.
  double min_remaining_visible_fraction = 0.0;
  int max_placement_attempts = 50;

  void check() const;
};

struct MergeConfig {
  double iou_threshold = 0.75;
  bool drop_stuff = true;
  bool drop_crowd = true;

  void check() const;
};

// An object cut from another image. Masks live on the source image canvas.
struct Donor {
  InstanceAnnotation annotation;
  long long source_image_id = 0;
  int source_width = 0;
  int source_height = 0;
  Margins source_canvas_margin;
};

// One entry of the compositing manifest consumed by an external renderer.
// z counts pastes within the output image; a larger z is drawn on top.
struct CompositeEntry {
  long long output_image_id = 0;
  long long donor_annotation_id = 0;
  long long donor_source_image = 0;
  int dx = 0;
  int dy = 0;
  int z = 0;

  friend bool operator==(const CompositeEntry&, const CompositeEntry&) = default;
};

struct PasteResult {
  ImageRecord image;
  std::vector<CompositeEntry> composites;
};

// Pastes each donor at a sampled offset in front of everything already in
// the image. Pre-existing objects lose the pasted pixels from their visible
// mask and gain them in their invisible mask; amodal masks never change.
// Throws NoValidPlacement when a donor cannot be placed.
PasteResult paste_augment(const ImageRecord& base, std::span<const Donor> donors,
                          const AugmentConfig& config, Rng& rng);

struct SynthesisResult {
  Dataset dataset;
  std::vector<CompositeEntry> composites;
};

// Synthesizes n_images by pasting donors from other images of the source
// dataset onto randomly chosen base images. With modal_source every source
// annotation is treated as amodal := visible, so occlusion masks only exist
// where a pasted object covers something. Image k uses its own RNG stream,
// so the output does not depend on `threads`.
SynthesisResult build_augmented(const Dataset& source, const AugmentConfig& config, int n_images,
                                bool modal_source, int threads = 1);
SynthesisResult build_modal_aug(const Dataset& modal, const AugmentConfig& config, int n_images,
                                int threads = 1);

// Grows every image just enough that all amodal masks fit inside it and
// records the padding applied.
Dataset pad_dataset_for_amodal(const Dataset& dataset);

// Transfers categories from a modal dataset onto a class-less amodal one by
// greedy one-to-one visible-mask IoU matching. Unmatched annotations are
// dropped. Throws ImageIdMismatch when an amodal image is missing from modal.
Dataset merge_categories(const Dataset& amodal, const Dataset& modal, const MergeConfig& config);

std::string composites_json(std::span<const CompositeEntry> composites);

}  // namespace amodal
