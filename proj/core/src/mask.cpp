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
#include "amodal/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amodal/error.hpp"

namespace amodal {

namespace {

std::uint64_t pixel_count(int height, int width) {
  return static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
}

void check_same_size(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_size(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.height()) + "x" + std::to_string(a.width()) + " vs " +
                    std::to_string(b.height()) + "x" + std::to_string(b.width()));
  }
}

// Calls fn(x, y_begin, y_end) for every maximal vertical foreground segment,
// in column-major order.
template <typename Fn>
void for_each_segment(const BinaryMask& mask, Fn&& fn) {
  const auto height = static_cast<std::uint64_t>(mask.height());
  std::uint64_t pos = 0;
  const auto& runs = mask.runs();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::uint64_t len = runs[i];
    if (i % 2 == 1) {
      std::uint64_t p = pos;
      const std::uint64_t end = pos + len;
      while (p < end) {
        const std::uint64_t x = p / height;
        const std::uint64_t y = p % height;
        const std::uint64_t take = std::min(end - p, height - y);
        fn(static_cast<int>(x), static_cast<int>(y), static_cast<int>(y + take));
        p += take;
      }
    }
    pos += len;
  }
}

}  // namespace

// Accumulates (value, length) pieces into canonical runs.
class RunBuilder {
 public:
  RunBuilder(int height, int width) : height_(height), width_(width) {}

  void append(bool value, std::uint64_t length) {
    if (length == 0) return;
    if (runs_.empty()) {
      if (value) runs_.push_back(0);
      runs_.push_back(static_cast<std::uint32_t>(length));
    } else if (value == last_value_) {
      runs_.back() += static_cast<std::uint32_t>(length);
    } else {
      runs_.push_back(static_cast<std::uint32_t>(length));
    }
    last_value_ = value;
    written_ += length;
  }

  std::uint64_t written() const noexcept { return written_; }

  BinaryMask finish() && {
    append(false, pixel_count(height_, width_) - written_);
    if (runs_.empty()) runs_.push_back(0);
    return BinaryMask(height_, width_, std::move(runs_));
  }

 private:
  int height_;
  int width_;
  std::vector<std::uint32_t> runs_;
  bool last_value_ = false;
  std::uint64_t written_ = 0;
};

namespace {

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  check_same_size(a, b);
  RunBuilder out(a.height(), a.width());
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  std::size_t ia = 0;
  std::size_t ib = 0;
  std::uint64_t left_a = ra.empty() ? 0 : ra[0];
  std::uint64_t left_b = rb.empty() ? 0 : rb[0];
  const std::uint64_t total = pixel_count(a.height(), a.width());
  std::uint64_t done = 0;
  while (done < total) {
    while (left_a == 0) left_a = ra[++ia];
    while (left_b == 0) left_b = rb[++ib];
    const std::uint64_t step = std::min(left_a, left_b);
    out.append(op(ia % 2 == 1, ib % 2 == 1), step);
    left_a -= step;
    left_b -= step;
    done += step;
  }
  return std::move(out).finish();
}

}  // namespace

DenseGrid::DenseGrid(int height, int width, bool fill)
    : height_(height), width_(width), cells_(pixel_count(height, width), fill ? 1 : 0) {}

std::uint64_t DenseGrid::count() const {
  return static_cast<std::uint64_t>(std::count(cells_.begin(), cells_.end(), 1));
}

BinaryMask BinaryMask::empty(int height, int width) {
  return std::move(RunBuilder(height, width)).finish();
}

BinaryMask BinaryMask::full(int height, int width) {
  RunBuilder builder(height, width);
  builder.append(true, pixel_count(height, width));
  return std::move(builder).finish();
}

BinaryMask BinaryMask::from_runs(int height, int width, std::vector<std::uint32_t> runs) {
  const std::uint64_t sum =
      std::accumulate(runs.begin(), runs.end(), std::uint64_t{0});
  if (height < 0 || width < 0 || sum != pixel_count(height, width)) {
    throw Error(ErrorCode::kRunSumMismatch,
                "runs sum to " + std::to_string(sum) + ", expected " +
                    std::to_string(pixel_count(height, width)));
  }
  RunBuilder builder(height, width);
  for (std::size_t i = 0; i < runs.size(); ++i) builder.append(i % 2 == 1, runs[i]);
  return std::move(builder).finish();
}

std::uint64_t BinaryMask::area() const noexcept {
  std::uint64_t total = 0;
  for (std::size_t i = 1; i < runs_.size(); i += 2) total += runs_[i];
  return total;
}

BinaryMask rle_encode(const DenseGrid& dense) {
  RunBuilder builder(dense.height(), dense.width());
  const auto cells = dense.cells();
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    builder.append(cells[i] != 0, j - i);
    i = j;
  }
  return std::move(builder).finish();
}

DenseGrid rle_decode(const BinaryMask& mask) {
  DenseGrid grid(mask.height(), mask.width());
  for_each_segment(mask, [&](int x, int y0, int y1) {
    for (int y = y0; y < y1; ++y) grid.set(x, y);
  });
  return grid;
}

BinaryMask rasterize(const Polygon& polygon, int height, int width) {
  const auto& v = polygon.vertices;
  if (v.size() < 3) {
    throw Error(ErrorCode::kDegeneratePolygon,
                "polygon has " + std::to_string(v.size()) + " vertices");
  }
  DenseGrid grid(height, width);
  std::vector<double> crossings;
  for (int y = 0; y < height; ++y) {
    const double py = y + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if ((v[i].y > py) != (v[j].y > py)) {
        crossings.push_back((v[j].x - v[i].x) * (py - v[i].y) / (v[j].y - v[i].y) + v[i].x);
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // Inside iff an odd number of crossings lie strictly right of the center.
    std::size_t at_or_left = 0;
    for (int x = 0; x < width; ++x) {
      const double px = x + 0.5;
      while (at_or_left < crossings.size() && crossings[at_or_left] <= px) ++at_or_left;
      if ((crossings.size() - at_or_left) % 2 == 1) grid.set(x, y);
    }
  }
  return rle_encode(grid);
}

BinaryMask rasterize(std::span<const Polygon> polygons, int height, int width) {
  BinaryMask out = BinaryMask::empty(height, width);
  for (const auto& polygon : polygons) out = union_of(out, rasterize(polygon, height, width));
  return out;
}

bool exceeds_bounds(const Polygon& polygon, int height, int width) {
  return std::any_of(polygon.vertices.begin(), polygon.vertices.end(), [&](const Point& p) {
    return p.x < 0.0 || p.y < 0.0 || p.x > width || p.y > height;
  });
}

std::uint64_t area(const BinaryMask& mask) { return mask.area(); }

BinaryMask intersection(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}

BinaryMask union_of(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}

BinaryMask difference(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  check_same_size(a, b);
  const auto& ra = a.runs();
  const auto& rb = b.runs();
  // Walk foreground intervals of both masks and sum overlaps.
  std::uint64_t total = 0;
  std::size_t ia = 1;
  std::size_t ib = 1;
  std::uint64_t start_a = ra.empty() ? 0 : ra[0];
  std::uint64_t start_b = rb.empty() ? 0 : rb[0];
  while (ia < ra.size() && ib < rb.size()) {
    const std::uint64_t end_a = start_a + ra[ia];
    const std::uint64_t end_b = start_b + rb[ib];
    const std::uint64_t lo = std::max(start_a, start_b);
    const std::uint64_t hi = std::min(end_a, end_b);
    if (hi > lo) total += hi - lo;
    if (end_a <= end_b) {
      start_a = end_a + (ia + 1 < ra.size() ? ra[ia + 1] : 0);
      ia += 2;
    } else {
      start_b = end_b + (ib + 1 < rb.size() ? rb[ib + 1] : 0);
      ib += 2;
    }
  }
  return total;
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  return intersection_area(a, b) == a.area();
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_area(a, b);
  const std::uint64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask translate(const BinaryMask& mask, int dx, int dy, int height, int width) {
  RunBuilder builder(height, width);
  const auto out_height = static_cast<std::uint64_t>(height);
  for_each_segment(mask, [&](int x, int y0, int y1) {
    const int nx = x + dx;
    if (nx < 0 || nx >= width) return;
    const int ny0 = std::max(y0 + dy, 0);
    const int ny1 = std::min(y1 + dy, height);
    if (ny1 <= ny0) return;
    const std::uint64_t pos = static_cast<std::uint64_t>(nx) * out_height + ny0;
    builder.append(false, pos - builder.written());
    builder.append(true, static_cast<std::uint64_t>(ny1 - ny0));
  });
  return std::move(builder).finish();
}

BinaryMask paste(const BinaryMask& base, const BinaryMask& stamp, int dx, int dy) {
  return union_of(base, translate(stamp, dx, dy, base.height(), base.width()));
}

BinaryMask pad(const BinaryMask& mask, int left, int top, int right, int bottom) {
  return translate(mask, left, top, mask.height() + top + bottom, mask.width() + left + right);
}

BoundingBox bounding_box(const BinaryMask& mask) {
  BoundingBox box{0, 0, 0, 0};
  bool any = false;
  for_each_segment(mask, [&](int x, int y0, int y1) {
    if (!any) {
      box = {x, y0, x + 1, y1};
      any = true;
      return;
    }
    box.x0 = std::min(box.x0, x);
    box.x1 = std::max(box.x1, x + 1);
    box.y0 = std::min(box.y0, y0);
    box.y1 = std::max(box.y1, y1);
  });
  return box;
}

std::vector<std::uint32_t> decode_counts_string(std::string_view counts) {
  std::vector<long long> values;
  std::size_t p = 0;
  while (p < counts.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) throw Error(ErrorCode::kParseError, "truncated RLE counts string");
      const int c = static_cast<int>(static_cast<unsigned char>(counts[p])) - 48;
      if (c < 0 || c > 63) throw Error(ErrorCode::kParseError, "invalid RLE counts character");
      x |= static_cast<long long>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10) != 0) x |= -1LL << (5 * k);
    }
    if (values.size() > 2) x += values[values.size() - 2];
    values.push_back(x);
  }
  std::vector<std::uint32_t> runs;
  runs.reserve(values.size());
  for (const long long v : values) {
    if (v < 0) throw Error(ErrorCode::kParseError, "negative run in RLE counts string");
    runs.push_back(static_cast<std::uint32_t>(v));
  }
  return runs;
}

}  // namespace amodal
