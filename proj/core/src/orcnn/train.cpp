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
#include "amodal/orcnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amodal/error.hpp"
#include "amodal/orcnn/corpus.hpp"
#include "amodal/rng.hpp"
#include "segmentation_json.hpp"

namespace amodal::orcnn {

void TrainConfig::check() const {
  model.check();
  schedule.check();
  if (steps < 0) throw Error(ErrorCode::kConfigError, "steps must be non-negative");
  if (batch_size < 1) throw Error(ErrorCode::kConfigError, "batch_size must be >= 1");
  if (weight_decay < 0.0 || momentum < 0.0 || momentum >= 1.0) {
    throw Error(ErrorCode::kConfigError, "invalid weight decay or momentum");
  }
}

TrainConfig TrainConfig::toy(int steps, double base_lr) {
  TrainConfig c;
  c.steps = steps;
  LrSchedule reference;
  reference.base_lr = base_lr;
  c.schedule = steps > 0 ? reference.scaled(kReferenceIterations, steps) : reference;
  return c;
}

std::string step_log_json(const StepLog& log) {
  detail::OrderedJson j;
  j["step"] = log.step;
  j["lr"] = log.lr;
  j["l_cls"] = log.loss.l_cls;
  j["l_box"] = log.loss.l_box;
  j["l_am"] = log.loss.l_am;
  j["l_vm"] = log.loss.l_vm;
  j["l_ivm"] = log.loss.l_ivm;
  j["total"] = log.loss.total;
  return j.dump();
}

namespace {

void add_into(LossBreakdown& acc, const LossBreakdown& x, double w) {
  acc.l_cls += w * x.l_cls;
  acc.l_box += w * x.l_box;
  acc.l_am += w * x.l_am;
  acc.l_vm += w * x.l_vm;
  acc.l_ivm += w * x.l_ivm;
  acc.total += w * x.total;
}

LossBreakdown sample_loss(const Params& params, const RoiSample& sample, Variant variant,
                          const ForwardOptions& fo = {}, const LossOptions& lo = {}) {
  Tape tape;
  const ParamVars vars = place_params(tape, params);
  const HeadVars heads = forward(tape, vars, sample.features, variant, fo);
  const int channel = params.config.class_agnostic ? 0 : sample.gt_class;
  return total_loss(tape, heads, sample, variant, channel, lo).values;
}

}  // namespace

LossBreakdown mean_loss(const Params& params, std::span<const RoiSample> corpus, Variant variant) {
  LossBreakdown acc;
  if (corpus.empty()) return acc;
  const double w = 1.0 / static_cast<double>(corpus.size());
  for (const auto& s : corpus) add_into(acc, sample_loss(params, s, variant), w);
  return acc;
}

TrainResult train_toy(const TrainConfig& config, std::span<const RoiSample> corpus,
                      const std::function<void(const StepLog&)>& on_step) {
  config.check();
  if (corpus.empty() && config.steps > 0) throw Error(ErrorCode::kConfigError, "empty training corpus");
  TrainResult result;
  result.params = shared_init(config.model, config.seed);
  result.initial_corpus_loss = mean_loss(result.params, corpus, config.variant);

  Rng order_rng = Rng::stream(config.seed, 1);
  std::vector<std::size_t> order(corpus.size());
  std::size_t cursor = order.size();
  auto next_index = [&]() {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
      cursor = 0;
    }
    return order[cursor++];
  };

  SgdState state;
  const double inv_batch = 1.0 / config.batch_size;
  for (int step = 1; step <= config.steps; ++step) {
    StepLog log;
    log.step = step;
    log.lr = config.schedule.at(step - 1);
    Gradients grads;
    for (int b = 0; b < config.batch_size; ++b) {
      const SampleResult r = loss_and_gradients(result.params, corpus[next_index()], config.variant,
                                                config.forward, config.loss);
      add_into(log.loss, r.loss, inv_batch);
      if (grads.tensors.empty()) {
        grads = r.grads;
        for (auto& t : grads.tensors) {
          for (auto& v : t.data) v *= inv_batch;
        }
      } else {
        for (std::size_t i = 0; i < grads.tensors.size(); ++i) {
          for (std::size_t j = 0; j < grads.tensors[i].size(); ++j) {
            grads.tensors[i][j] += inv_batch * r.grads.tensors[i][j];
          }
        }
      }
    }
    sgd_step(result.params, grads, state, log.lr, config.weight_decay, config.momentum);
    if (on_step) on_step(log);
    result.log.push_back(log);
  }
  result.final_corpus_loss = mean_loss(result.params, corpus, config.variant);
  return result;
}

EvalResult evaluate_predictions(const Params& params, std::span<const RoiSample> samples,
                                Variant variant, const EvalConfig& config) {
  const int k = params.config.num_classes;
  Dataset ds;
  ds.split_name = "held_out";
  for (int c = 0; c < k; ++c) ds.categories.push_back({c + 1, "shape" + std::to_string(c), false});
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RoiSample& s = samples[i];
    const int m = s.gt_amodal.dim(0);
    ImageRecord image;
    image.id = static_cast<long long>(i) + 1;
    image.width = m;
    image.height = m;
    InstanceAnnotation a;
    a.id = image.id;
    a.image_id = image.id;
    a.category_id = s.gt_class + 1;
    a.amodal = tensor_to_mask(s.gt_amodal, 0.5);
    a.visible = tensor_to_mask(s.gt_visible, 0.5);
    BinaryMask hidden = difference(a.amodal, a.visible);
    if (!hidden.is_empty()) a.invisible = std::move(hidden);
    image.annotations.push_back(std::move(a));
    ds.images.push_back(std::move(image));

    const HeadLogits out = forward_heads(s.features, params, variant);
    const auto best = std::max_element(out.cls.data.begin(), out.cls.data.end());
    const int cls = static_cast<int>(best - out.cls.data.begin());
    double denom = 0.0;
    for (double v : out.cls.data) denom += std::exp(v - *best);
    const int channel = params.config.class_agnostic ? 0 : cls;
    Tape tape;
    auto plane = [&](const Tensor& t) { return tape.value(select_channel(tape, tape.constant(t), channel)); };
    Detection d;
    d.image_id = static_cast<long long>(i) + 1;
    d.category_id = cls + 1;
    d.score = 1.0 / denom;
    d.amodal = tensor_to_mask(plane(out.am));
    d.visible = tensor_to_mask(plane(out.vm));
    d.invisible = tensor_to_mask(plane(out.ivm));
    dets.push_back(std::move(d));
  }
  return evaluate(ds, dets, config);
}

double invisible_ap50(const Params& params, std::span<const RoiSample> samples, Variant variant) {
  EvalConfig config;
  config.metric = Metric::kInvisible;
  config.iv_threshold = 0.5;
  const EvalResult r = evaluate_predictions(params, samples, variant, config);
  return r.mean_ap.value_or(0.0);
}

RandomCase random_case(const ModelConfig& model, std::uint64_t seed) {
  Rng rng(seed);
  RandomCase rc;
  rc.params = shared_init(model, rng.next());
  for (auto& e : rc.params.entries()) {
    for (auto& v : e.tensor->data) v += 0.3 * rng.normal();
  }
  const int m = model.roi_size;
  RoiSample& s = rc.sample;
  s.features = Tensor({model.channels, m, m});
  for (auto& v : s.features.data) v = rng.normal();
  s.gt_class = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.num_classes)));
  s.gt_box_delta = Tensor({4});
  for (auto& v : s.gt_box_delta.data) v = 2.0 * rng.normal();
  s.gt_amodal = Tensor({m, m});
  s.gt_visible = Tensor({m, m});
  for (std::size_t i = 0; i < s.gt_amodal.size(); ++i) {
    s.gt_amodal[i] = rng.chance(0.6) ? 1.0 : 0.0;
    s.gt_visible[i] = s.gt_amodal[i] > 0 && rng.chance(0.6) ? 1.0 : 0.0;
  }
  return rc;
}

namespace {

struct TermValues {
  std::array<double, kNumLossTerms> v{};
  double kink = 0.0;
};

TermValues term_values(const Params& params, const RoiSample& sample) {
  Tape tape;
  const ParamVars vars = place_params(tape, params);
  const HeadVars heads = forward(tape, vars, sample.features, Variant::kFull);
  const int channel = params.config.class_agnostic ? 0 : sample.gt_class;
  const LossVars loss = total_loss(tape, heads, sample, Variant::kFull, channel);
  TermValues out;
  for (std::size_t t = 0; t < loss.terms.size(); ++t) out.v[t] = tape.value(*loss.terms[t])[0];
  out.kink = tape.min_kink_distance();
  return out;
}

}  // namespace

GradCheckReport gradient_check(const GradCheckConfig& config) {
  ModelConfig model;
  model.channels = config.channels;
  model.roi_size = config.roi_size;
  model.num_classes = config.num_classes;
  model.head_convs = config.head_convs;
  model.check();

  GradCheckReport report;
  std::uint64_t draw = 0;
  while (report.configs_checked < config.configs) {
    RandomCase rc = random_case(model, Rng::stream(config.seed, draw++).next());
    if (term_values(rc.params, rc.sample).kink < config.kink_margin) {
      ++report.configs_redrawn;
      continue;
    }
    // Analytic gradient of each term separately.
    Tape tape;
    const ParamVars vars = place_params(tape, rc.params);
    const HeadVars heads = forward(tape, vars, rc.sample.features, Variant::kFull);
    const int channel = rc.params.config.class_agnostic ? 0 : rc.sample.gt_class;
    const LossVars loss = total_loss(tape, heads, rc.sample, Variant::kFull, channel);
    std::array<std::vector<Tensor>, kNumLossTerms> analytic;
    for (std::size_t t = 0; t < loss.terms.size(); ++t) {
      tape.backward(*loss.terms[t]);
      for (const Var leaf : vars.leaves) analytic[t].push_back(tape.grad(leaf));
    }

    auto entries = rc.params.entries();
    for (std::size_t e = 0; e < entries.size(); ++e) {
      Tensor& tensor = *entries[e].tensor;
      for (std::size_t j = 0; j < tensor.size(); ++j) {
        const double saved = tensor[j];
        tensor[j] = saved + config.epsilon;
        const TermValues plus = term_values(rc.params, rc.sample);
        tensor[j] = saved - config.epsilon;
        const TermValues minus = term_values(rc.params, rc.sample);
        tensor[j] = saved;
        for (std::size_t t = 0; t < kNumLossTerms; ++t) {
          const double numeric = (plus.v[t] - minus.v[t]) / (2.0 * config.epsilon);
          const double a = analytic[t][e][j];
          const double denom = std::max({std::abs(a), std::abs(numeric), config.relative_floor});
          const double rel = std::abs(a - numeric) / denom;
          ++report.comparisons;
          if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_parameter = entries[e].name + "[" + std::to_string(j) + "]";
            report.worst_term = static_cast<LossTerm>(t);
          }
        }
      }
    }
    ++report.configs_checked;
  }
  return report;
}

RoutingTable observed_routing(const Params& params, const RoiSample& sample, Variant variant) {
  Tape tape;
  const ParamVars vars = place_params(tape, params);
  const HeadVars heads = forward(tape, vars, sample.features, variant);
  const int channel = params.config.class_agnostic ? 0 : sample.gt_class;
  const LossVars loss = total_loss(tape, heads, sample, variant, channel);
  auto entries = const_cast<Params&>(params).entries();
  RoutingTable table{};
  for (std::size_t t = 0; t < loss.terms.size(); ++t) {
    if (!loss.terms[t]) continue;
    tape.backward(*loss.terms[t]);
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const Tensor& g = tape.grad(vars.leaves[e]);
      const bool nonzero = std::any_of(g.data.begin(), g.data.end(), [](double v) { return v != 0.0; });
      if (nonzero) table[t][static_cast<std::size_t>(entries[e].group)] = true;
    }
  }
  return table;
}

RoutingTable declared_routing(Variant variant) {
  RoutingTable table{};
  for (int t = 0; t < kNumLossTerms; ++t) {
    for (int g = 0; g < kNumParamGroups; ++g) {
      table[static_cast<std::size_t>(t)][static_cast<std::size_t>(g)] =
          routes_to(variant, static_cast<LossTerm>(t), static_cast<ParamGroup>(g));
    }
  }
  return table;
}

ProbabilityGradientDemo probability_space_gradients(double am, double vm, double target) {
  const Tensor y = Tensor::scalar(target);
  auto norm = [](const Tape& tape, Var a, Var b) {
    return std::hypot(tape.grad(a)[0], tape.grad(b)[0]);
  };
  ProbabilityGradientDemo demo;
  {
    Tape tape;
    const Var a = tape.leaf(Tensor::scalar(am), true);
    const Var b = tape.leaf(Tensor::scalar(vm), true);
    tape.backward(bce_with_logits(tape, sub(tape, a, relu(tape, b)), y));
    demo.logit_space_norm = norm(tape, a, b);
  }
  {
    Tape tape;
    const Var a = tape.leaf(Tensor::scalar(am), true);
    const Var b = tape.leaf(Tensor::scalar(vm), true);
    tape.backward(probability_difference_bce(tape, a, b, y));
    demo.probability_space_norm = norm(tape, a, b);
  }
  demo.ratio = demo.logit_space_norm > 0 ? demo.probability_space_norm / demo.logit_space_norm
                                         : std::numeric_limits<double>::infinity();
  return demo;
}

}  // namespace amodal::orcnn
