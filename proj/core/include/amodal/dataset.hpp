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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/error.hpp"
#include "amodal/mask.hpp"

namespace amodal {

struct Category {
  int id = 0;
  std::string name;
  bool is_stuff = false;

  friend bool operator==(const Category&, const Category&) = default;
};

// One ground-truth object. An absent invisible mask means "not annotated as
// occluded", which is distinct from a present-but-empty one.
struct InstanceAnnotation {
  long long id = 0;
  long long image_id = 0;
  int category_id = 0;
  BinaryMask amodal;
  BinaryMask visible;
  std::optional<BinaryMask> invisible;
  int depth_order = 0;  // 0 = front-most
  bool is_crowd = false;

  friend bool operator==(const InstanceAnnotation&, const InstanceAnnotation&) = default;
};

struct Margins {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool is_zero() const noexcept { return left == 0 && top == 0 && right == 0 && bottom == 0; }
  friend bool operator==(const Margins&, const Margins&) = default;
};

struct ImageRecord {
  long long id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  std::vector<InstanceAnnotation> annotations;
  // Zero-padding already applied to width/height; absent if never padded.
  std::optional<Margins> padding;
  // Masks live on a canvas extending this far beyond the image on each side,
  // so amodal extents past the border survive until padding is applied.
  Margins canvas_margin;

  int canvas_width() const noexcept { return width + canvas_margin.left + canvas_margin.right; }
  int canvas_height() const noexcept { return height + canvas_margin.top + canvas_margin.bottom; }

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Dataset {
  std::vector<Category> categories;
  std::vector<ImageRecord> images;
  std::string split_name;

  const Category* find_category(int id) const;
  const ImageRecord* find_image(long long id) const;
  std::size_t annotation_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ValidateOptions {
  // Treat depth-order inconsistencies as violations instead of warnings.
  bool strict_depth_order = false;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;

  bool ok() const noexcept { return violations.empty(); }
};

// Checks every dataset invariant and collects all problems found.
ValidationReport check_dataset(const Dataset& dataset, const ValidateOptions& options = {});
// Throws ValidationError listing all violations.
void validate(const Dataset& dataset, const ValidateOptions& options = {});

// The occluder relation used by the depth check: the front object's visible
// pixels inside the back object's amodal region must be annotated invisible.
std::vector<Violation> depth_order_conflicts(const ImageRecord& image);

bool is_occluded(const InstanceAnnotation& annotation);
// area(invisible) / area(amodal); 0 when the invisible mask is absent.
double occlusion_rate(const InstanceAnnotation& annotation);

enum class DatasetFormat { kNative, kCocoa, kD2sAmodal };

std::optional<DatasetFormat> parse_dataset_format(std::string_view name);
std::string_view format_name(DatasetFormat format);

struct LoadOptions {
  // visible ⊄ amodal by at most this many pixels is repaired by clipping.
  std::uint64_t visible_slack_pixels = 0;
};

struct LoadReport {
  std::size_t repaired_visible = 0;
  std::size_t clipped_polygons = 0;
  std::size_t synthesized_invisible = 0;
  std::vector<Violation> warnings;
};

Dataset parse_dataset(std::string_view json_text, DatasetFormat format,
                      const LoadOptions& options = {}, LoadReport* report = nullptr);
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     const LoadOptions& options = {}, LoadReport* report = nullptr);

std::string to_native_json(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Writes text to path, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace amodal
