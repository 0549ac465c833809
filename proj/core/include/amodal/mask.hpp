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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amodal {

// Dense boolean raster stored column-major (index = x * height + y), the
// same pixel order the run-length encoding walks.
class DenseGrid {
 public:
  DenseGrid() = default;
  DenseGrid(int height, int width, bool fill = false);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }

  bool at(int x, int y) const { return cells_[index(x, y)] != 0; }
  void set(int x, int y, bool value = true) { cells_[index(x, y)] = value ? 1 : 0; }

  std::span<const std::uint8_t> cells() const noexcept { return cells_; }
  std::uint64_t count() const;

  friend bool operator==(const DenseGrid&, const DenseGrid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(height_) +
           static_cast<std::size_t>(y);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Run-length encoded binary mask in COCO layout: column-major pixel order,
// alternating background/foreground runs, leading background run may be 0.
// Runs are always canonical (no zero runs after the first, no trailing zero),
// so structural equality is mask equality.
class BinaryMask {
 public:
  BinaryMask() = default;

  // All-background mask.
  static BinaryMask empty(int height, int width);
  static BinaryMask full(int height, int width);

  // Validates sum(runs) == height * width (RunSumMismatch) and canonicalizes.
  static BinaryMask from_runs(int height, int width, std::vector<std::uint32_t> runs);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  const std::vector<std::uint32_t>& runs() const noexcept { return runs_; }

  std::uint64_t area() const noexcept;
  bool is_empty() const noexcept { return runs_.size() <= 1; }
  bool same_size(const BinaryMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  BinaryMask(int height, int width, std::vector<std::uint32_t> runs)
      : height_(height), width_(width), runs_(std::move(runs)) {}

  friend class RunBuilder;

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint32_t> runs_;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Implicitly closed polygon in pixel coordinates.
struct Polygon {
  std::vector<Point> vertices;
};

struct BoundingBox {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool is_empty() const noexcept { return x1 <= x0 || y1 <= y0; }
};

BinaryMask rle_encode(const DenseGrid& dense);
DenseGrid rle_decode(const BinaryMask& mask);

// Pixel (x, y) is set iff its center (x + 0.5, y + 0.5) lies inside the
// polygon under the even-odd rule. Throws DegeneratePolygon below 3 vertices.
BinaryMask rasterize(const Polygon& polygon, int height, int width);
// Union of several polygons, as COCO polygon segmentations are stored.
BinaryMask rasterize(std::span<const Polygon> polygons, int height, int width);
// True when any vertex lies outside [0, width] x [0, height].
bool exceeds_bounds(const Polygon& polygon, int height, int width);

std::uint64_t area(const BinaryMask& mask);
BinaryMask intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask union_of(const BinaryMask& a, const BinaryMask& b);
BinaryMask difference(const BinaryMask& a, const BinaryMask& b);
std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
// a ⊆ b
bool is_subset(const BinaryMask& a, const BinaryMask& b);

// area(a ∩ b) / area(a ∪ b); 0 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

// Moves foreground by (dx, dy) onto a height x width canvas; pixels landing
// outside the canvas are dropped.
BinaryMask translate(const BinaryMask& mask, int dx, int dy, int height, int width);

// Union of base with stamp shifted by (dx, dy), clipped to base.
BinaryMask paste(const BinaryMask& base, const BinaryMask& stamp, int dx, int dy);

BinaryMask pad(const BinaryMask& mask, int left, int top, int right, int bottom);

// Tight box around the foreground; empty box for an empty mask.
BoundingBox bounding_box(const BinaryMask& mask);

// Decodes the compressed LEB128-style counts string used by COCO tooling.
std::vector<std::uint32_t> decode_counts_string(std::string_view counts);

}  // namespace amodal
