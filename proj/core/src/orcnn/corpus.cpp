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
#include "amodal/orcnn/corpus.hpp"

#include <cmath>

#include "amodal/error.hpp"
#include "amodal/rng.hpp"

namespace amodal::orcnn {

namespace {

Polygon rectangle(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

Polygon ellipse(double cx, double cy, double rx, double ry) {
  Polygon p;
  constexpr int kVertices = 48;
  for (int i = 0; i < kVertices; ++i) {
    const double t = 6.283185307179586 * i / kVertices;
    p.vertices.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return p;
}

ShapeScene draw_scene(int m, Rng& rng) {
  for (;;) {
    ShapeScene s;
    s.shape_class = static_cast<int>(rng.below(kShapeClasses));
    const int x0 = static_cast<int>(rng.range(0, 2));
    const int y0 = static_cast<int>(rng.range(0, 2));
    const int x1 = m - static_cast<int>(rng.range(0, 2));
    const int y1 = m - static_cast<int>(rng.range(0, 2));
    s.amodal = s.shape_class == 0
                   ? rasterize(rectangle(x0, y0, x1, y1), m, m)
                   : rasterize(ellipse(0.5 * (x0 + x1), 0.5 * (y0 + y1), 0.5 * (x1 - x0), 0.5 * (y1 - y0)), m, m);

    // Occluder enters from one side and covers 20-50% of the box extent.
    const int side = static_cast<int>(rng.below(4));
    const bool horizontal = side < 2;
    const int extent = horizontal ? x1 - x0 : y1 - y0;
    const int depth = static_cast<int>(std::lround(extent * rng.uniform(0.2, 0.5)));
    const int along_lo = static_cast<int>(rng.range(0, m / 2 - 1));
    const int along_hi = static_cast<int>(rng.range(m / 2 + 1, m));
    double ox0 = 0, oy0 = 0, ox1 = 0, oy1 = 0;
    if (horizontal) {
      ox0 = side == 0 ? 0 : x1 - depth;
      ox1 = side == 0 ? x0 + depth : m;
      oy0 = along_lo;
      oy1 = along_hi;
    } else {
      oy0 = side == 2 ? 0 : y1 - depth;
      oy1 = side == 2 ? y0 + depth : m;
      ox0 = along_lo;
      ox1 = along_hi;
    }
    s.occluder = rasterize(rectangle(ox0, oy0, ox1, oy1), m, m);
    s.visible = difference(s.amodal, s.occluder);
    if (s.visible.is_empty() || s.visible == s.amodal) continue;
    s.box = bounding_box(s.amodal);
    return s;
  }
}

}  // namespace

std::vector<ShapeScene> generate_scenes(const CorpusConfig& config) {
  if (config.size < 0 || config.roi_size < 6) {
    throw Error(ErrorCode::kConfigError, "corpus needs size >= 0 and roi_size >= 6");
  }
  std::vector<ShapeScene> scenes;
  scenes.reserve(static_cast<std::size_t>(config.size));
  for (int i = 0; i < config.size; ++i) {
    Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(i));
    scenes.push_back(draw_scene(config.roi_size, rng));
  }
  return scenes;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
  const DenseGrid grid = rle_decode(mask);
  Tensor t({mask.height(), mask.width()});
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      t[static_cast<std::size_t>(y) * mask.width() + x] = grid.at(x, y) ? 1.0 : 0.0;
    }
  }
  return t;
}

BinaryMask tensor_to_mask(const Tensor& plane, double threshold) {
  if (plane.shape.size() != 2) throw Error(ErrorCode::kShapeMismatch, "expected an [H, W] plane");
  const int h = plane.dim(0), w = plane.dim(1);
  DenseGrid grid(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (plane[static_cast<std::size_t>(y) * w + x] > threshold) grid.set(x, y);
    }
  }
  return rle_encode(grid);
}

RoiSample featurize(const ShapeScene& scene) {
  const int m = scene.amodal.height();
  const Tensor visible = mask_to_tensor(scene.visible);
  const Tensor occluder = mask_to_tensor(scene.occluder);
  const std::size_t plane = static_cast<std::size_t>(m) * m;
  RoiSample s;
  s.features = Tensor({kFeatureChannels, m, m});
  for (int y = 0; y < m; ++y) {
    for (int x = 0; x < m; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * m + x;
      const double v = visible[p];
      const double o = occluder[p];
      s.features[0 * plane + p] = scene.shape_class == 0 ? v : 0.0;
      s.features[1 * plane + p] = scene.shape_class == 1 ? v : 0.0;
      s.features[2 * plane + p] = o;
      s.features[3 * plane + p] = 2.0 * (x + 0.5) / m - 1.0;
      s.features[4 * plane + p] = 2.0 * (y + 0.5) / m - 1.0;
      s.features[5 * plane + p] = v;
      s.features[6 * plane + p] = 1.0;
      s.features[7 * plane + p] = (v == 0.0 && o == 0.0) ? 1.0 : 0.0;
    }
  }
  s.gt_class = scene.shape_class;
  s.gt_box_delta = Tensor({4});
  s.gt_box_delta[0] = static_cast<double>(scene.box.x0) / m;
  s.gt_box_delta[1] = static_cast<double>(scene.box.y0) / m;
  s.gt_box_delta[2] = static_cast<double>(scene.box.x1) / m;
  s.gt_box_delta[3] = static_cast<double>(scene.box.y1) / m;
  s.gt_amodal = mask_to_tensor(scene.amodal);
  s.gt_visible = visible;
  return s;
}

std::vector<RoiSample> make_corpus(const CorpusConfig& config) {
  std::vector<RoiSample> out;
  for (const auto& scene : generate_scenes(config)) out.push_back(featurize(scene));
  return out;
}

}  // namespace amodal::orcnn
