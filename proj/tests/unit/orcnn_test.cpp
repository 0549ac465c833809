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
#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "amodal/error.hpp"
#include "amodal/orcnn/model.hpp"
#include "amodal/orcnn/tape.hpp"
#include "amodal/orcnn/train.hpp"
#include "amodal/rng.hpp"

namespace amodal::orcnn {
namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.normal();
  return t;
}

double hand_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Zero weights everywhere; output biases set the mask logits directly.
Params constant_params(double am_bias, double vm_bias) {
  ModelConfig cfg;
  cfg.channels = 2;
  cfg.roi_size = 3;
  Params p = shared_init(cfg, 0);
  for (auto& e : p.entries()) std::fill(e.tensor->data.begin(), e.tensor->data.end(), 0.0);
  std::fill(p.amodal.output.bias.data.begin(), p.amodal.output.bias.data.end(), am_bias);
  std::fill(p.visible.output.bias.data.begin(), p.visible.output.bias.data.end(), vm_bias);
  return p;
}

TEST(Heads, OcclusionConstant) {
  const Params p = constant_params(14, 10);
  const HeadLogits out = forward_heads(Tensor({2, 3, 3}, 0.5), p, Variant::kFull);
  for (const double v : out.ivm.data) {
    EXPECT_DOUBLE_EQ(v, 4.0);
    EXPECT_NEAR(sigmoid(v), 0.982, 5e-4);
  }
}

TEST(Heads, ReluGuardOnNegativeVisibleLogits) {
  const Params p = constant_params(-10, -20);
  const HeadLogits guarded = forward_heads(Tensor({2, 3, 3}), p, Variant::kFull);
  EXPECT_DOUBLE_EQ(guarded.ivm[0], -10.0);
  EXPECT_NEAR(sigmoid(guarded.ivm[0]), hand_sigmoid(-10.0), 1e-18);
  EXPECT_NEAR(sigmoid(guarded.ivm[0]), 4.54e-5, 1e-7);
  ForwardOptions raw;
  raw.relu_guard = false;
  const HeadLogits unguarded = forward_heads(Tensor({2, 3, 3}), p, Variant::kFull, raw);
  EXPECT_DOUBLE_EQ(unguarded.ivm[0], 10.0);
  EXPECT_NEAR(sigmoid(unguarded.ivm[0]), hand_sigmoid(10.0), 1e-15);
  EXPECT_NEAR(sigmoid(unguarded.ivm[0]), 0.99995, 1e-5);
}

TEST(Heads, LogitIdentity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const RandomCase c = random_case({3, 5, 2, 4, false}, seed);
    const HeadLogits out = forward_heads(c.sample.features, c.params, Variant::kFull);
    for (std::size_t i = 0; i < out.am.size(); ++i) {
      ASSERT_EQ(out.ivm[i], out.am[i] - std::max(0.0, out.vm[i]));
    }
  }
}

TEST(Heads, ShapeMismatch) {
  const Params p = constant_params(0, 0);
  try {
    forward_heads(Tensor({3, 3, 3}), p, Variant::kFull);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Init, HeadsShareValues) {
  const Params p = shared_init({}, 7);
  EXPECT_TRUE(p.amodal == p.visible);
  EXPECT_FALSE(shared_init({}, 8).amodal == p.amodal);
}

TEST(MaskLoss, KnownValues) {
  const Tensor ones({1, 2, 2}, 1.0);
  EXPECT_NEAR(mask_loss(Tensor({1, 2, 2}, 50.0), Tensor({2, 2}, 1.0), 0), 0.0, 1e-20);
  EXPECT_NEAR(mask_loss(Tensor({1, 2, 2}, 0.0), Tensor({2, 2}, 1.0), 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(mask_loss(Tensor({1, 2, 2}, 0.0), Tensor({2, 2}, 0.0), 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(mask_loss(Tensor({1, 1, 1}, 4.0), Tensor({1, 1}, 0.0), 0), 4.0181499279, 1e-9);
}

// Leaves for hand-set head outputs on a 2-class 4x4 sample.
struct HandHeads {
  Tape tape;
  HeadVars heads;
  RoiSample sample;
};

void hand_heads(HandHeads& h, Rng& rng) {
  h.sample.features = Tensor({1, 4, 4});
  h.sample.gt_class = 1;
  h.sample.gt_box_delta = random_tensor(rng, {4});
  h.sample.gt_amodal = Tensor({4, 4});
  h.sample.gt_visible = Tensor({4, 4});
  for (int i = 0; i < 16; ++i) {
    h.sample.gt_amodal[static_cast<std::size_t>(i)] = i % 3 != 0 ? 1.0 : 0.0;
    h.sample.gt_visible[static_cast<std::size_t>(i)] = i % 3 == 1 ? 1.0 : 0.0;
  }
  h.heads.am = h.tape.leaf(random_tensor(rng, {2, 4, 4}), true);
  h.heads.vm = h.tape.leaf(random_tensor(rng, {2, 4, 4}), true);
  h.heads.ivm = sub(h.tape, h.heads.am, relu(h.tape, h.heads.vm));
  h.heads.cls = h.tape.leaf(random_tensor(rng, {2}), true);
  h.heads.box = h.tape.leaf(random_tensor(rng, {4}), true);
}

TEST(TotalLoss, EqualsHandComputedTerms) {
  Rng rng(12);
  HandHeads h;
  hand_heads(h, rng);
  const LossVars loss = total_loss(h.tape, h.heads, h.sample, Variant::kFull, 1);
  const Tensor& am = h.tape.value(h.heads.am);
  const Tensor& vm = h.tape.value(h.heads.vm);
  auto bce = [](double x, double y) {
    return -(y * std::log(hand_sigmoid(x)) + (1 - y) * std::log(1 - hand_sigmoid(x)));
  };
  double l_am = 0, l_vm = 0, l_ivm = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    const double a = am[16 + i], v = vm[16 + i];
    const double ya = h.sample.gt_amodal[i], yv = h.sample.gt_visible[i];
    l_am += bce(a, ya) / 16;
    l_vm += bce(v, yv) / 16;
    l_ivm += bce(a - std::max(v, 0.0), ya - yv) / 16;
  }
  const Tensor& cls = h.tape.value(h.heads.cls);
  const double l_cls = std::log(std::exp(cls[0]) + std::exp(cls[1])) - cls[1];
  double l_box = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = std::abs(h.tape.value(h.heads.box)[i] - h.sample.gt_box_delta[i]);
    l_box += d < 1 ? 0.5 * d * d : d - 0.5;
  }
  EXPECT_NEAR(loss.values.l_am, l_am, 1e-12);
  EXPECT_NEAR(loss.values.l_vm, l_vm, 1e-12);
  EXPECT_NEAR(loss.values.l_ivm, l_ivm, 1e-12);
  EXPECT_NEAR(loss.values.l_cls, l_cls, 1e-12);
  EXPECT_NEAR(loss.values.l_box, l_box, 1e-12);
  EXPECT_NEAR(loss.values.total, l_am + l_vm + l_ivm + l_cls + l_box, 1e-12);
  EXPECT_NEAR(h.tape.value(loss.total)[0], loss.values.total, 1e-15);
}

TEST(TotalLoss, VariantsZeroTheirTerms) {
  Rng rng(13);
  HandHeads h;
  hand_heads(h, rng);
  const LossVars no_lv = total_loss(h.tape, h.heads, h.sample, Variant::kWithoutLv, 0);
  EXPECT_EQ(no_lv.values.l_vm, 0.0);
  EXPECT_FALSE(no_lv.terms[static_cast<int>(LossTerm::kVisible)].has_value());
  const LossVars no_liv = total_loss(h.tape, h.heads, h.sample, Variant::kWithoutLiv, 0);
  EXPECT_EQ(no_liv.values.l_ivm, 0.0);
  EXPECT_GT(no_liv.values.l_vm, 0.0);
}

TEST(TotalLoss, UnoccludedSampleWithConfidentLogits) {
  Tape tape;
  RoiSample s;
  s.gt_class = 0;
  s.gt_box_delta = Tensor({4});
  s.gt_amodal = Tensor({2, 2}, 1.0);
  s.gt_visible = s.gt_amodal;
  HeadVars heads;
  heads.am = tape.leaf(Tensor({1, 2, 2}, 40.0), true);
  heads.vm = tape.leaf(Tensor({1, 2, 2}, 80.0), true);
  heads.ivm = sub(tape, heads.am, relu(tape, heads.vm));
  heads.cls = tape.leaf(Tensor({2}), true);
  heads.box = tape.leaf(Tensor({4}), true);
  const LossVars loss = total_loss(tape, heads, s, Variant::kFull, 0);
  EXPECT_LT(loss.values.l_ivm, 1e-15);
  EXPECT_LT(loss.values.l_am, 1e-15);
}

// Central differences of a scalar function of one input tensor.
void check_op(const std::function<Var(Tape&, Var)>& f, Tensor x, double tol = 1e-7) {
  Tape tape;
  const Var in = tape.leaf(x, true);
  tape.backward(f(tape, in));
  const Tensor analytic = tape.grad(in);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto eval = [&](double delta) {
      Tensor y = x;
      y[i] += delta;
      Tape t;
      return t.value(f(t, t.leaf(y, true)))[0];
    };
    const double numeric = (eval(1e-6) - eval(-1e-6)) / 2e-6;
    EXPECT_NEAR(analytic[i], numeric, tol * std::max(1.0, std::abs(numeric))) << i;
  }
}

TEST(Tape, OpGradients) {
  Rng rng(2);
  const Tensor w = random_tensor(rng, {3, 2, 3, 3});
  const Tensor b = random_tensor(rng, {3});
  const Tensor target = Tensor({3, 4}, 1.0);
  const Tensor lw = random_tensor(rng, {4, 2});
  check_op([&](Tape& t, Var x) {
    const Var y = conv2d(t, x, t.constant(w), t.constant(b));
    return softmax_cross_entropy(t, mean_spatial(t, relu(t, y)), 2);
  }, random_tensor(rng, {2, 3, 4}));
  check_op([&](Tape& t, Var x) {
    return bce_with_logits(t, select_channel(t, scale(t, x, 1.5), 1), target);
  }, random_tensor(rng, {2, 3, 4}));
  check_op([&](Tape& t, Var x) {
    return smooth_l1(t, linear(t, x, t.constant(lw), t.constant(Tensor({4}, 0.1))), Tensor({4}, 0.3));
  }, random_tensor(rng, {2}));
  check_op([&](Tape& t, Var x) {
    return bce_with_logits(t, add(t, x, scale(t, x, 0.5)), Tensor({2, 2}, 0.0));
  }, random_tensor(rng, {2, 2}));
  check_op([&](Tape& t, Var x) {
    return probability_difference_bce(t, x, t.constant(Tensor({2}, -1.0)), Tensor({2}, 1.0));
  }, Tensor(std::vector<int>{2}, 0.5));
  // Weight and bias paths of the convolution.
  const Tensor xin = random_tensor(rng, {2, 3, 3});
  check_op([&](Tape& t, Var wv) {
    return bce_with_logits(t, select_channel(t, conv2d(t, t.constant(xin), wv, t.constant(b)), 0),
                           Tensor({3, 3}, 1.0));
  }, w);
  check_op([&](Tape& t, Var bv) {
    return bce_with_logits(t, select_channel(t, conv2d(t, t.constant(xin), t.constant(w), bv), 2),
                           Tensor({3, 3}, 0.0));
  }, b);
}

TEST(Tape, StopGradientBlocks) {
  Tape tape;
  const Var x = tape.leaf(Tensor::scalar(2.0), true);
  tape.backward(scale(tape, stop_gradient(tape, x), 3.0));
  EXPECT_EQ(tape.grad(x)[0], 0.0);
}

TEST(Routing, ObservedMatchesDeclared) {
  for (const Variant v : kAllVariants) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const RandomCase c = random_case({2, 4, 2, 4, false}, 100 + seed);
      EXPECT_EQ(observed_routing(c.params, c.sample, v), declared_routing(v)) << variant_name(v);
    }
  }
}

TEST(Routing, VisibleLossNeverReachesAmodalHead) {
  for (const Variant v : kAllVariants) {
    EXPECT_FALSE(routes_to(v, LossTerm::kVisible, ParamGroup::kAmodalHead));
  }
  EXPECT_FALSE(routes_to(Variant::kIndependent, LossTerm::kInvisible, ParamGroup::kAmodalHead));
  EXPECT_FALSE(routes_to(Variant::kIndependent, LossTerm::kInvisible, ParamGroup::kTrunk));
  EXPECT_TRUE(routes_to(Variant::kFull, LossTerm::kInvisible, ParamGroup::kTrunk));
}

TEST(ProbabilitySpace, GradientShrinksInSaturation) {
  const ProbabilityGradientDemo demo = probability_space_gradients(12.0, 10.0, 0.0);
  EXPECT_GT(demo.logit_space_norm, 0.0);
  EXPECT_LT(demo.ratio, 1e-2);
}

TEST(Variants, NamesRoundTrip) {
  for (const Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_FALSE(parse_variant("half").has_value());
}

}  // namespace
}  // namespace amodal::orcnn
