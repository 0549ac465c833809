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
#include "segmentation_json.hpp"

#include <cmath>

#include "amodal/error.hpp"

namespace amodal::detail {

namespace {

Polygon polygon_from_flat(const Json& flat, double shift_x, double shift_y) {
  if (!flat.is_array() || flat.size() % 2 != 0) {
    throw Error(ErrorCode::kParseError, "polygon must be a flat list of x,y pairs");
  }
  Polygon poly;
  for (std::size_t i = 0; i < flat.size(); i += 2) {
    if (!flat[i].is_number() || !flat[i + 1].is_number()) {
      throw Error(ErrorCode::kParseError, "polygon coordinates must be numbers");
    }
    const double x = flat[i].get<double>() + shift_x;
    const double y = flat[i + 1].get<double>() + shift_y;
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw Error(ErrorCode::kParseError, "polygon coordinates must be finite");
    }
    poly.vertices.push_back({x, y});
  }
  return poly;
}

}  // namespace

std::optional<BinaryMask> parse_segmentation(const Json& value, int height, int width,
                                             double shift_x, double shift_y, bool* clipped) {
  if (value.is_null()) return std::nullopt;
  if (value.is_object()) {
    if (!value.contains("size") || !value.contains("counts")) {
      throw Error(ErrorCode::kParseError, "RLE segmentation needs 'size' and 'counts'");
    }
    const auto& size = value.at("size");
    if (!size.is_array() || size.size() != 2) {
      throw Error(ErrorCode::kParseError, "RLE 'size' must be [height, width]");
    }
    const int h = size[0].get<int>();
    const int w = size[1].get<int>();
    const auto& counts = value.at("counts");
    std::vector<std::uint32_t> runs;
    if (counts.is_string()) {
      runs = decode_counts_string(counts.get<std::string>());
    } else if (counts.is_array()) {
      runs.reserve(counts.size());
      for (const auto& c : counts) {
        if (!c.is_number_integer() || c.get<long long>() < 0) {
          throw Error(ErrorCode::kParseError, "RLE counts must be non-negative integers");
        }
        runs.push_back(c.get<std::uint32_t>());
      }
    } else {
      throw Error(ErrorCode::kParseError, "RLE 'counts' must be a list or string");
    }
    return BinaryMask::from_runs(h, w, std::move(runs));
  }
  if (value.is_array()) {
    std::vector<Polygon> polygons;
    if (!value.empty() && value[0].is_number()) {
      polygons.push_back(polygon_from_flat(value, shift_x, shift_y));
    } else {
      for (const auto& flat : value) polygons.push_back(polygon_from_flat(flat, shift_x, shift_y));
    }
    if (clipped != nullptr) {
      for (const auto& p : polygons) {
        if (exceeds_bounds(p, height, width)) *clipped = true;
      }
    }
    return rasterize(polygons, height, width);
  }
  throw Error(ErrorCode::kParseError, "segmentation must be an RLE object or polygon list");
}

OrderedJson mask_to_json(const BinaryMask& mask) {
  OrderedJson out;
  out["size"] = {mask.height(), mask.width()};
  out["counts"] = mask.runs();
  return out;
}

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

}  // namespace amodal::detail
