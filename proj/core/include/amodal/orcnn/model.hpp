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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amodal/orcnn/tape.hpp"

namespace amodal::orcnn {

enum class Variant { kFull, kWithoutLiv, kWithoutLv, kIndependent };

std::optional<Variant> parse_variant(std::string_view name);
std::string_view variant_name(Variant variant);
inline constexpr std::array<Variant, 4> kAllVariants = {Variant::kFull, Variant::kWithoutLiv,
                                                        Variant::kWithoutLv, Variant::kIndependent};

struct ModelConfig {
  int channels = 8;     // C
  int roi_size = 14;    // M
  int num_classes = 2;  // K
  int head_convs = 4;
  bool class_agnostic = false;

  int mask_channels() const noexcept { return class_agnostic ? 1 : num_classes; }
  void check() const;
};

struct ConvParams {
  Tensor weight;  // [Cout, Cin, k, k]
  Tensor bias;    // [Cout]
};

struct MaskHeadParams {
  std::vector<ConvParams> convs;  // 3x3, C -> C
  ConvParams output;              // 1x1, C -> K (or 1)

  friend bool operator==(const MaskHeadParams& a, const MaskHeadParams& b) {
    auto same = [](const ConvParams& x, const ConvParams& y) {
      return x.weight == y.weight && x.bias == y.bias;
    };
    if (a.convs.size() != b.convs.size() || !same(a.output, b.output)) return false;
    for (std::size_t i = 0; i < a.convs.size(); ++i) {
      if (!same(a.convs[i], b.convs[i])) return false;
    }
    return true;
  }
};

enum class ParamGroup { kTrunk, kAmodalHead, kVisibleHead, kClassifier, kBoxRegressor };
inline constexpr int kNumParamGroups = 5;
std::string_view group_name(ParamGroup group);

struct Params {
  ModelConfig config;
  ConvParams trunk;  // 3x3, C -> C, shared RoI feature extraction
  MaskHeadParams amodal;
  MaskHeadParams visible;
  Tensor cls_weight;  // [K, C]
  Tensor cls_bias;    // [K]
  Tensor box_weight;  // [4, C]
  Tensor box_bias;    // [4]

  struct Entry {
    std::string name;
    ParamGroup group;
    Tensor* tensor;
  };
  // Every parameter tensor in a fixed order.
  std::vector<Entry> entries();
  std::vector<std::pair<std::string, const Tensor*>> entries() const;
  std::size_t scalar_count() const;
};

// Seeded fan-in scaled normal init standing in for pre-training. Both mask
// heads receive identical values.
Params shared_init(const ModelConfig& config, std::uint64_t seed);

struct RoiSample {
  Tensor features;     // [C, M, M]
  int gt_class = 0;
  Tensor gt_box_delta;  // [4]
  Tensor gt_amodal;     // [M, M] in {0, 1}
  Tensor gt_visible;    // [M, M] in {0, 1}, subset of gt_amodal
};

struct ForwardOptions {
  bool relu_guard = true;  // debug: false subtracts raw visible logits
};

// Parameters placed on a tape as differentiable leaves.
struct ParamVars {
  Var trunk_w, trunk_b;
  std::vector<std::pair<Var, Var>> amodal, visible;  // convs then output
  Var cls_w, cls_b, box_w, box_b;
  // Leaf per entry of Params::entries(), same order.
  std::vector<Var> leaves;
};

ParamVars place_params(Tape& tape, const Params& params);

struct HeadVars {
  Var trunk;
  Var am;   // [K, M, M]
  Var vm;
  Var ivm;
  Var cls;  // [K]
  Var box;  // [4]
};

HeadVars forward(Tape& tape, const ParamVars& params, const Tensor& features, Variant variant,
                 const ForwardOptions& options = {});

struct HeadLogits {
  Tensor am;
  Tensor vm;
  Tensor ivm;
  Tensor cls;
  Tensor box;
};

// Inference-only forward pass.
HeadLogits forward_heads(const Tensor& features, const Params& params, Variant variant,
                         const ForwardOptions& options = {});

struct LossBreakdown {
  double l_cls = 0.0;
  double l_box = 0.0;
  double l_am = 0.0;
  double l_vm = 0.0;
  double l_ivm = 0.0;
  double total = 0.0;
};

struct LossOptions {
  // Debug: occlusion loss on sigmoid(am) - sigmoid(vm) instead of logits.
  bool probability_space_ivm = false;
};

enum class LossTerm { kCls, kBox, kAmodal, kVisible, kInvisible };
inline constexpr int kNumLossTerms = 5;
std::string_view term_name(LossTerm term);

struct LossVars {
  std::array<std::optional<Var>, kNumLossTerms> terms;  // nullopt when zeroed
  Var total;
  LossBreakdown values;
};

LossVars total_loss(Tape& tape, const HeadVars& heads, const RoiSample& sample, Variant variant,
                    int mask_channel, const LossOptions& options = {});

// Mean BCE-with-logits of one channel against a binary target, as a value.
double mask_loss(const Tensor& logits, const Tensor& target, int channel);

// Whether a loss term may produce nonzero gradients in a parameter group.
bool routes_to(Variant variant, LossTerm term, ParamGroup group);

struct Gradients {
  std::vector<Tensor> tensors;  // aligned with Params::entries()
};

struct SampleResult {
  LossBreakdown loss;
  Gradients grads;
};

SampleResult loss_and_gradients(const Params& params, const RoiSample& sample, Variant variant,
                                const ForwardOptions& forward_options = {},
                                const LossOptions& loss_options = {});

struct SgdState {
  std::vector<Tensor> velocity;
};

// v = momentum * v + lr * (g + weight_decay * w); w -= v.
void sgd_step(Params& params, const Gradients& grads, SgdState& state, double lr,
              double weight_decay, double momentum);

struct LrSchedule {
  double base_lr = 0.0025;
  std::vector<int> steps = {6000, 8000};
  double gamma = 0.1;
  int warmup_iters = 500;
  double warmup_factor = 1.0 / 3.0;

  void check() const;
  double at(int iteration) const;
  // Same shape with milestones and warmup rescaled from `reference_length`
  // iterations to `length`.
  LrSchedule scaled(int reference_length, int length) const;
};

inline constexpr std::string_view kCheckpointFormat = "amodal-micro-orcnn";
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_json(const Params& params);
Params parse_checkpoint(std::string_view json_text);

}  // namespace amodal::orcnn
