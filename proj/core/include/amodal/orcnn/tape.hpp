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

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace amodal::orcnn {

// Dense row-major array of 64-bit reals. Feature maps are [C, H, W].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, double fill = 0.0);
  static Tensor scalar(double value);

  std::size_t size() const noexcept { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  int dim(std::size_t axis) const { return shape.at(axis); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(std::span<const int> shape);

struct Var {
  int id = -1;
};

// Records a computation for reverse-mode differentiation. Nodes are appended
// in creation order, which is a topological order; backward walks it in
// reverse, so accumulation order is fixed.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Zeroes all gradients, seeds d(root)/d(root) = 1 and propagates. Root must
  // be a scalar.
  void backward(Var root);

  // Smallest distance of any recorded input to a non-differentiable point
  // (ReLU at 0, smooth-L1 at |d| = beta). Used to reject finite-difference
  // configurations that straddle a kink.
  double min_kink_distance() const noexcept { return min_kink_distance_; }
  void note_kink_distance(double d) noexcept {
    if (d < min_kink_distance_) min_kink_distance_ = d;
  }

  // Backprop closure receives the tape and the node's own id.
  using Backprop = std::function<void(Tape&, int)>;
  Var record(Tensor value, std::vector<int> parents, Backprop backprop);

  Tensor& grad_ref(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Tensor& value_ref(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    Backprop backprop;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  double min_kink_distance_ = std::numeric_limits<double>::infinity();
};

// 3x3 or 1x1 convolution with zero "same" padding.
// x: [Cin, H, W], w: [Cout, Cin, k, k], b: [Cout] -> [Cout, H, W].
Var conv2d(Tape& tape, Var x, Var w, Var b);
Var relu(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
// Identity on values; blocks gradient flow into x.
Var stop_gradient(Tape& tape, Var x);
// [C, H, W] -> [C]
Var mean_spatial(Tape& tape, Var x);
// x: [In], w: [Out, In], b: [Out] -> [Out]
Var linear(Tape& tape, Var x, Var w, Var b);
// [C, H, W] -> [H, W]
Var select_channel(Tape& tape, Var x, int channel);
// Mean over elements of the stable binary cross-entropy with logits.
Var bce_with_logits(Tape& tape, Var logits, const Tensor& target);
// Softmax cross-entropy of a logit vector against a class index.
Var softmax_cross_entropy(Tape& tape, Var logits, int label);
// Sum over elements of smooth-L1(x - target) with transition point beta.
Var smooth_l1(Tape& tape, Var x, const Tensor& target, double beta = 1.0);
// Mean binary cross-entropy on the probability difference
// p = sigmoid(a) - sigmoid(b), clamped to [eps, 1 - eps].
Var probability_difference_bce(Tape& tape, Var a, Var b, const Tensor& target,
                               double eps = 1e-12);

double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace amodal::orcnn
