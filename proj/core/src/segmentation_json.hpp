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

#include <optional>
#include <string_view>

#include "amodal/mask.hpp"
#include "json.hpp"

namespace amodal::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Parses a COCO-style segmentation: RLE object ({size, counts}) with integer
// or compressed-string counts, a list of polygons, or a single flat polygon.
// Polygons are shifted by (shift_x, shift_y) and rasterized onto the canvas;
// *clipped is set when any vertex falls outside it. Null yields nullopt.
std::optional<BinaryMask> parse_segmentation(const Json& value, int height, int width,
                                             double shift_x = 0.0, double shift_y = 0.0,
                                             bool* clipped = nullptr);

OrderedJson mask_to_json(const BinaryMask& mask);

Json parse_json_text(std::string_view text);

}  // namespace amodal::detail
