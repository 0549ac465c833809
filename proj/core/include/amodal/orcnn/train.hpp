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
#include <functional>
#include <span>
#include <string>

#include "amodal/evaluation.hpp"
#include "amodal/orcnn/model.hpp"

namespace amodal::orcnn {

// Iteration count the reference solver milestones refer to.
inline constexpr int kReferenceIterations = 10000;

struct TrainConfig {
  Variant variant = Variant::kFull;
  std::uint64_t seed = 0;
  int steps = 500;
  int batch_size = 1;
  LrSchedule schedule;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  ModelConfig model;
  ForwardOptions forward;
  LossOptions loss;

  void check() const;
  // Reference schedule compressed to `steps` iterations at the given base rate.
  static TrainConfig toy(int steps, double base_lr);
};

struct StepLog {
  int step = 0;  // 1-based
  double lr = 0.0;
  LossBreakdown loss;  // mean over the batch
};

std::string step_log_json(const StepLog& log);

struct TrainResult {
  Params params;
  std::vector<StepLog> log;
  LossBreakdown initial_corpus_loss;  // mean over the corpus before step 1
  LossBreakdown final_corpus_loss;
};

TrainResult train_toy(const TrainConfig& config, std::span<const RoiSample> corpus,
                      const std::function<void(const StepLog&)>& on_step = {});

LossBreakdown mean_loss(const Params& params, std::span<const RoiSample> corpus, Variant variant);

// Treats each sample as one image with one object and the model's top-class
// prediction as its detection (masks thresholded at probability 0.5), then
// runs the evaluator.
EvalResult evaluate_predictions(const Params& params, std::span<const RoiSample> samples,
                                Variant variant, const EvalConfig& config);

// AP at IoU 0.5 of invisible masks on occluded ground truth.
double invisible_ap50(const Params& params, std::span<const RoiSample> samples, Variant variant);

struct GradCheckConfig {
  int configs = 20;
  int channels = 2;
  int roi_size = 4;
  int num_classes = 2;
  int head_convs = 4;
  double epsilon = 1e-5;
  // Denominator floor of the relative error.
  double relative_floor = 1e-3;
  // Configurations with an activation this close to a kink are redrawn.
  double kink_margin = 1e-4;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  int configs_checked = 0;
  int configs_redrawn = 0;
  std::size_t comparisons = 0;
  double max_relative_error = 0.0;
  std::string worst_parameter;
  LossTerm worst_term = LossTerm::kCls;
};

// Central finite differences against the analytic gradient of each of the
// five loss terms for every parameter scalar.
GradCheckReport gradient_check(const GradCheckConfig& config);

// Random parameters (heads not tied) and a random consistent sample.
struct RandomCase {
  Params params;
  RoiSample sample;
};
RandomCase random_case(const ModelConfig& model, std::uint64_t seed);

// observed[term][group]: whether the term's gradient is nonzero anywhere in
// the group.
using RoutingTable = std::array<std::array<bool, kNumParamGroups>, kNumLossTerms>;
RoutingTable observed_routing(const Params& params, const RoiSample& sample, Variant variant);
RoutingTable declared_routing(Variant variant);

struct ProbabilityGradientDemo {
  double logit_space_norm = 0.0;
  double probability_space_norm = 0.0;
  double ratio = 0.0;
};

// Gradient norm w.r.t. (am, vm) of the occlusion loss at a single pixel, in
// logit space and in probability space.
ProbabilityGradientDemo probability_space_gradients(double am, double vm, double target);

}  // namespace amodal::orcnn
