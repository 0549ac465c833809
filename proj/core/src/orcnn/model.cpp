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
#include "amodal/orcnn/model.hpp"

#include <cmath>
#include <tuple>

#include "amodal/error.hpp"
#include "amodal/rng.hpp"
#include "segmentation_json.hpp"

namespace amodal::orcnn {

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "full") return Variant::kFull;
  if (name == "no-liv" || name == "without-liv") return Variant::kWithoutLiv;
  if (name == "no-lv" || name == "without-lv") return Variant::kWithoutLv;
  if (name == "independent") return Variant::kIndependent;
  return std::nullopt;
}

std::string_view variant_name(Variant variant) {
  switch (variant) {
    case Variant::kFull: return "full";
    case Variant::kWithoutLiv: return "no-liv";
    case Variant::kWithoutLv: return "no-lv";
    case Variant::kIndependent: return "independent";
  }
  return "unknown";
}

std::string_view group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::kTrunk: return "trunk";
    case ParamGroup::kAmodalHead: return "amodal_head";
    case ParamGroup::kVisibleHead: return "visible_head";
    case ParamGroup::kClassifier: return "cls";
    case ParamGroup::kBoxRegressor: return "box";
  }
  return "unknown";
}

std::string_view term_name(LossTerm term) {
  switch (term) {
    case LossTerm::kCls: return "l_cls";
    case LossTerm::kBox: return "l_box";
    case LossTerm::kAmodal: return "l_am";
    case LossTerm::kVisible: return "l_vm";
    case LossTerm::kInvisible: return "l_ivm";
  }
  return "unknown";
}

void ModelConfig::check() const {
  if (channels < 1 || roi_size < 1 || num_classes < 1 || head_convs < 0) {
    throw Error(ErrorCode::kConfigError, "model dimensions must be positive");
  }
}

std::vector<Params::Entry> Params::entries() {
  std::vector<Entry> out;
  out.push_back({"trunk.weight", ParamGroup::kTrunk, &trunk.weight});
  out.push_back({"trunk.bias", ParamGroup::kTrunk, &trunk.bias});
  auto head = [&](const char* prefix, MaskHeadParams& h, ParamGroup g) {
    for (std::size_t i = 0; i < h.convs.size(); ++i) {
      const std::string p = std::string(prefix) + ".conv" + std::to_string(i);
      out.push_back({p + ".weight", g, &h.convs[i].weight});
      out.push_back({p + ".bias", g, &h.convs[i].bias});
    }
    out.push_back({std::string(prefix) + ".output.weight", g, &h.output.weight});
    out.push_back({std::string(prefix) + ".output.bias", g, &h.output.bias});
  };
  head("amodal", amodal, ParamGroup::kAmodalHead);
  head("visible", visible, ParamGroup::kVisibleHead);
  out.push_back({"cls.weight", ParamGroup::kClassifier, &cls_weight});
  out.push_back({"cls.bias", ParamGroup::kClassifier, &cls_bias});
  out.push_back({"box.weight", ParamGroup::kBoxRegressor, &box_weight});
  out.push_back({"box.bias", ParamGroup::kBoxRegressor, &box_bias});
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> Params::entries() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const auto& e : const_cast<Params*>(this)->entries()) out.emplace_back(e.name, e.tensor);
  return out;
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries()) n += t->size();
  return n;
}

namespace {

ConvParams make_conv(int cout, int cin, int k) {
  return {Tensor({cout, cin, k, k}), Tensor({cout})};
}

void fill_normal(Tensor& t, double stddev, Rng& rng) {
  for (auto& v : t.data) v = stddev * rng.normal();
}

}  // namespace

Params shared_init(const ModelConfig& config, std::uint64_t seed) {
  config.check();
  Rng rng(seed);
  const int c = config.channels;
  const int k = config.mask_channels();
  const double conv_std = std::sqrt(2.0 / (c * 9));
  const double out_std = std::sqrt(2.0 / c);

  Params p;
  p.config = config;
  p.trunk = make_conv(c, c, 3);
  fill_normal(p.trunk.weight, conv_std, rng);
  for (int i = 0; i < config.head_convs; ++i) {
    ConvParams conv = make_conv(c, c, 3);
    fill_normal(conv.weight, conv_std, rng);
    p.amodal.convs.push_back(std::move(conv));
  }
  p.amodal.output = make_conv(k, c, 1);
  fill_normal(p.amodal.output.weight, out_std, rng);
  p.visible = p.amodal;

  p.cls_weight = Tensor({config.num_classes, c});
  p.cls_bias = Tensor({config.num_classes});
  p.box_weight = Tensor({4, c});
  p.box_bias = Tensor({4});
  fill_normal(p.cls_weight, 0.01, rng);
  fill_normal(p.box_weight, 0.001, rng);
  return p;
}

ParamVars place_params(Tape& tape, const Params& params) {
  ParamVars v;
  auto put = [&](const Tensor& t) {
    const Var var = tape.leaf(t, true);
    v.leaves.push_back(var);
    return var;
  };
  auto put_conv = [&](const ConvParams& conv) {
    const Var w = put(conv.weight);
    const Var b = put(conv.bias);
    return std::pair{w, b};
  };
  std::tie(v.trunk_w, v.trunk_b) = put_conv(params.trunk);
  for (const auto& conv : params.amodal.convs) v.amodal.push_back(put_conv(conv));
  v.amodal.push_back(put_conv(params.amodal.output));
  for (const auto& conv : params.visible.convs) v.visible.push_back(put_conv(conv));
  v.visible.push_back(put_conv(params.visible.output));
  v.cls_w = put(params.cls_weight);
  v.cls_b = put(params.cls_bias);
  v.box_w = put(params.box_weight);
  v.box_b = put(params.box_bias);
  return v;
}

namespace {

Var mask_head(Tape& tape, Var input, const std::vector<std::pair<Var, Var>>& layers) {
  Var h = input;
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    h = relu(tape, conv2d(tape, h, layers[i].first, layers[i].second));
  }
  return conv2d(tape, h, layers.back().first, layers.back().second);
}

}  // namespace

HeadVars forward(Tape& tape, const ParamVars& params, const Tensor& features, Variant variant,
                 const ForwardOptions& options) {
  const Var x = tape.constant(features);
  HeadVars out;
  out.trunk = relu(tape, conv2d(tape, x, params.trunk_w, params.trunk_b));
  const bool independent = variant == Variant::kIndependent;
  out.am = mask_head(tape, out.trunk, params.amodal);
  const Var visible_input = independent ? stop_gradient(tape, out.trunk) : out.trunk;
  out.vm = mask_head(tape, visible_input, params.visible);
  const Var minuend = independent ? stop_gradient(tape, out.am) : out.am;
  const Var subtrahend = options.relu_guard ? relu(tape, out.vm) : out.vm;
  out.ivm = sub(tape, minuend, subtrahend);
  const Var pooled = mean_spatial(tape, out.trunk);
  out.cls = linear(tape, pooled, params.cls_w, params.cls_b);
  out.box = linear(tape, pooled, params.box_w, params.box_b);
  return out;
}

HeadLogits forward_heads(const Tensor& features, const Params& params, Variant variant,
                         const ForwardOptions& options) {
  const ModelConfig& cfg = params.config;
  if (features.shape != std::vector<int>{cfg.channels, cfg.roi_size, cfg.roi_size}) {
    throw Error(ErrorCode::kShapeMismatch, "features must be [C, M, M] matching the model");
  }
  Tape tape;
  const ParamVars vars = place_params(tape, params);
  const HeadVars h = forward(tape, vars, features, variant, options);
  return {tape.value(h.am), tape.value(h.vm), tape.value(h.ivm), tape.value(h.cls), tape.value(h.box)};
}

double mask_loss(const Tensor& logits, const Tensor& target, int channel) {
  Tape tape;
  const Var x = tape.constant(logits);
  const Var plane = logits.shape.size() == 3 ? select_channel(tape, x, channel) : x;
  return tape.value(bce_with_logits(tape, plane, target))[0];
}

LossVars total_loss(Tape& tape, const HeadVars& heads, const RoiSample& sample, Variant variant,
                    int mask_channel, const LossOptions& options) {
  LossVars out;
  auto set = [&](LossTerm term, Var v) { out.terms[static_cast<std::size_t>(term)] = v; };
  set(LossTerm::kCls, softmax_cross_entropy(tape, heads.cls, sample.gt_class));
  set(LossTerm::kBox, smooth_l1(tape, heads.box, sample.gt_box_delta));
  set(LossTerm::kAmodal, bce_with_logits(tape, select_channel(tape, heads.am, mask_channel), sample.gt_amodal));
  if (variant != Variant::kWithoutLv) {
    set(LossTerm::kVisible,
        bce_with_logits(tape, select_channel(tape, heads.vm, mask_channel), sample.gt_visible));
  }
  if (variant != Variant::kWithoutLiv) {
    Tensor hidden(sample.gt_amodal.shape);
    for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = sample.gt_amodal[i] - sample.gt_visible[i];
    if (options.probability_space_ivm) {
      set(LossTerm::kInvisible,
          probability_difference_bce(tape, select_channel(tape, heads.am, mask_channel),
                                     select_channel(tape, heads.vm, mask_channel), hidden));
    } else {
      set(LossTerm::kInvisible,
          bce_with_logits(tape, select_channel(tape, heads.ivm, mask_channel), hidden));
    }
  }
  std::optional<Var> total;
  double* slots[] = {&out.values.l_cls, &out.values.l_box, &out.values.l_am, &out.values.l_vm,
                     &out.values.l_ivm};
  for (std::size_t i = 0; i < out.terms.size(); ++i) {
    if (!out.terms[i]) continue;
    *slots[i] = tape.value(*out.terms[i])[0];
    total = total ? add(tape, *total, *out.terms[i]) : *out.terms[i];
  }
  out.total = *total;
  out.values.total = tape.value(out.total)[0];
  return out;
}

bool routes_to(Variant variant, LossTerm term, ParamGroup group) {
  switch (term) {
    case LossTerm::kCls: return group == ParamGroup::kTrunk || group == ParamGroup::kClassifier;
    case LossTerm::kBox: return group == ParamGroup::kTrunk || group == ParamGroup::kBoxRegressor;
    case LossTerm::kAmodal: return group == ParamGroup::kTrunk || group == ParamGroup::kAmodalHead;
    case LossTerm::kVisible:
      if (variant == Variant::kWithoutLv) return false;
      if (variant == Variant::kIndependent) return group == ParamGroup::kVisibleHead;
      return group == ParamGroup::kTrunk || group == ParamGroup::kVisibleHead;
    case LossTerm::kInvisible:
      if (variant == Variant::kWithoutLiv) return false;
      if (variant == Variant::kIndependent) return group == ParamGroup::kVisibleHead;
      return group == ParamGroup::kTrunk || group == ParamGroup::kAmodalHead ||
             group == ParamGroup::kVisibleHead;
  }
  return false;
}

SampleResult loss_and_gradients(const Params& params, const RoiSample& sample, Variant variant,
                                const ForwardOptions& forward_options,
                                const LossOptions& loss_options) {
  Tape tape;
  const ParamVars vars = place_params(tape, params);
  const HeadVars heads = forward(tape, vars, sample.features, variant, forward_options);
  const int channel = params.config.class_agnostic ? 0 : sample.gt_class;
  const LossVars loss = total_loss(tape, heads, sample, variant, channel, loss_options);
  tape.backward(loss.total);
  SampleResult r;
  r.loss = loss.values;
  for (const Var leaf : vars.leaves) r.grads.tensors.push_back(tape.grad(leaf));
  return r;
}

void sgd_step(Params& params, const Gradients& grads, SgdState& state, double lr,
              double weight_decay, double momentum) {
  auto entries = params.entries();
  if (grads.tensors.size() != entries.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient count does not match parameters");
  }
  if (state.velocity.size() != entries.size()) {
    state.velocity.clear();
    for (const auto& e : entries) state.velocity.emplace_back(e.tensor->shape);
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& w = *entries[i].tensor;
    const Tensor& g = grads.tensors[i];
    Tensor& v = state.velocity[i];
    if (g.shape != w.shape) throw Error(ErrorCode::kShapeMismatch, "gradient shape mismatch for " + entries[i].name);
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum * v[j] + lr * (g[j] + weight_decay * w[j]);
      w[j] -= v[j];
    }
  }
}

void LrSchedule::check() const {
  if (!(base_lr > 0.0)) throw Error(ErrorCode::kConfigError, "base learning rate must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::kConfigError, "gamma must be in (0, 1]");
  if (warmup_iters < 0 || !(warmup_factor > 0.0 && warmup_factor <= 1.0)) {
    throw Error(ErrorCode::kConfigError, "invalid warmup");
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i] <= 0 || (i > 0 && steps[i] <= steps[i - 1])) {
      throw Error(ErrorCode::kConfigError, "schedule steps must be positive and increasing");
    }
  }
}

double LrSchedule::at(int iteration) const {
  double lr = base_lr;
  for (int s : steps) {
    if (iteration >= s) lr *= gamma;
  }
  if (iteration < warmup_iters) {
    const double alpha = static_cast<double>(iteration) / warmup_iters;
    lr *= warmup_factor * (1.0 - alpha) + alpha;
  }
  return lr;
}

LrSchedule LrSchedule::scaled(int reference_length, int length) const {
  if (reference_length <= 0 || length <= 0) {
    throw Error(ErrorCode::kConfigError, "schedule lengths must be positive");
  }
  LrSchedule s = *this;
  const double f = static_cast<double>(length) / reference_length;
  int previous = 0;
  for (auto& step : s.steps) {
    step = std::max(previous + 1, static_cast<int>(std::lround(step * f)));
    previous = step;
  }
  s.warmup_iters = static_cast<int>(std::lround(warmup_iters * f));
  return s;
}

std::string checkpoint_json(const Params& params) {
  detail::OrderedJson j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  const ModelConfig& c = params.config;
  j["config"] = {{"channels", c.channels},
                 {"roi_size", c.roi_size},
                 {"num_classes", c.num_classes},
                 {"head_convs", c.head_convs},
                 {"class_agnostic", c.class_agnostic}};
  detail::OrderedJson tensors = detail::OrderedJson::array();
  for (const auto& [name, t] : params.entries()) {
    tensors.push_back({{"name", name}, {"shape", t->shape}, {"values", t->data}});
  }
  j["tensors"] = std::move(tensors);
  return j.dump() + "\n";
}

Params parse_checkpoint(std::string_view json_text) {
  const detail::Json j = detail::parse_json_text(json_text);
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorCode::kParseError, "not a micro-orcnn checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::kParseError, "unsupported checkpoint version");
    }
    ModelConfig c;
    const auto& jc = j.at("config");
    c.channels = jc.at("channels").get<int>();
    c.roi_size = jc.at("roi_size").get<int>();
    c.num_classes = jc.at("num_classes").get<int>();
    c.head_convs = jc.at("head_convs").get<int>();
    c.class_agnostic = jc.at("class_agnostic").get<bool>();
    Params p = shared_init(c, 0);
    auto entries = p.entries();
    const auto& tensors = j.at("tensors");
    if (tensors.size() != entries.size()) throw Error(ErrorCode::kParseError, "checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& jt = tensors[i];
      if (jt.at("name").get<std::string>() != entries[i].name) {
        throw Error(ErrorCode::kParseError, "unexpected checkpoint tensor " + jt.at("name").get<std::string>());
      }
      Tensor t;
      t.shape = jt.at("shape").get<std::vector<int>>();
      t.data = jt.at("values").get<std::vector<double>>();
      if (t.shape != entries[i].tensor->shape || t.data.size() != entries[i].tensor->size()) {
        throw Error(ErrorCode::kParseError, "shape mismatch for " + entries[i].name);
      }
      *entries[i].tensor = std::move(t);
    }
    return p;
  } catch (const detail::Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace amodal::orcnn
