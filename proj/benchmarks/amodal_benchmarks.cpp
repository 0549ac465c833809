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
#include <benchmark/benchmark.h>

#include <cmath>

#include <vector>

#include "amodal/dataset.hpp"
#include "amodal/evaluation.hpp"
#include "amodal/mask.hpp"
#include "amodal/orcnn/corpus.hpp"
#include "amodal/orcnn/model.hpp"
#include "amodal/rng.hpp"
#include "amodal/synthesis.hpp"

namespace amodal {
namespace {

BinaryMask ellipse(int h, int w, double cx, double cy, double rx, double ry) {
  Polygon p;
  for (int k = 0; k < 64; ++k) {
    const double t = 6.283185307179586 * k / 64;
    p.vertices.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return rasterize(p, h, w);
}

void BM_Rasterize(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ellipse(s, s, s / 2.0, s / 2.0, s / 3.0, s / 4.0));
}
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(512);

void BM_Iou(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const BinaryMask a = ellipse(s, s, s * 0.45, s * 0.5, s / 3.0, s / 4.0);
  const BinaryMask b = ellipse(s, s, s * 0.55, s * 0.5, s / 3.0, s / 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(iou(a, b));
}
BENCHMARK(BM_Iou)->Arg(128)->Arg(512);

void BM_Difference(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const BinaryMask a = ellipse(s, s, s * 0.45, s * 0.5, s / 3.0, s / 4.0);
  const BinaryMask b = ellipse(s, s, s * 0.55, s * 0.5, s / 3.0, s / 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(difference(a, b));
}
BENCHMARK(BM_Difference)->Arg(128)->Arg(512);

// Images with `n` objects and one jittered detection per object.
struct EvalFixture {
  Dataset gt;
  std::vector<Detection> dets;
};

EvalFixture eval_fixture(int images, int n) {
  Rng rng(1);
  EvalFixture f;
  f.gt.categories = {{1, "a", false}, {2, "b", false}};
  long long id = 1;
  for (int i = 0; i < images; ++i) {
    ImageRecord img{i + 1, 256, 256, "", {}, std::nullopt, {}};
    for (int k = 0; k < n; ++k) {
      const double cx = rng.uniform(40, 216), cy = rng.uniform(40, 216);
      InstanceAnnotation a;
      a.id = id++;
      a.image_id = img.id;
      a.category_id = 1 + static_cast<int>(rng.below(2));
      a.amodal = ellipse(256, 256, cx, cy, 30, 20);
      a.visible = difference(a.amodal, ellipse(256, 256, cx + 25, cy, 20, 20));
      a.invisible = difference(a.amodal, a.visible);
      f.dets.push_back({img.id, a.category_id, rng.uniform(), ellipse(256, 256, cx + 2, cy, 30, 20), a.visible,
                        a.invisible});
      img.annotations.push_back(std::move(a));
    }
    f.gt.images.push_back(std::move(img));
  }
  return f;
}

void BM_EvaluateAv(benchmark::State& state) {
  const EvalFixture f = eval_fixture(20, static_cast<int>(state.range(0)));
  EvalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(f.gt, f.dets, cfg));
}
BENCHMARK(BM_EvaluateAv)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_BuildAugmented(benchmark::State& state) {
  const EvalFixture f = eval_fixture(10, 4);
  AugmentConfig cfg;
  cfg.exclude_boundary_objects = false;
  for (auto _ : state) benchmark::DoNotOptimize(build_augmented(f.gt, cfg, 20, false));
}
BENCHMARK(BM_BuildAugmented)->Unit(benchmark::kMillisecond);

void BM_LossAndGradients(benchmark::State& state) {
  orcnn::CorpusConfig cc;
  cc.size = 1;
  const auto sample = orcnn::make_corpus(cc).front();
  const orcnn::Params p = orcnn::shared_init({}, 0);
  for (auto _ : state) benchmark::DoNotOptimize(orcnn::loss_and_gradients(p, sample, orcnn::Variant::kFull));
}
BENCHMARK(BM_LossAndGradients)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace amodal

BENCHMARK_MAIN();
