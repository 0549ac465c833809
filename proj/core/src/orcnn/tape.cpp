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
#include "amodal/orcnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amodal/error.hpp"

namespace amodal::orcnn {

std::size_t element_count(std::span<const int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor::Tensor(std::vector<int> dims, double fill)
    : shape(std::move(dims)), data(element_count(shape), fill) {}

Tensor Tensor::scalar(double value) {
  Tensor t({1});
  t.data[0] = value;
  return t;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node node;
  node.grad = Tensor(value.shape);
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(Tensor value, std::vector<int> parents, Backprop backprop) {
  const int self = static_cast<int>(nodes_.size());
  bool any = false;
  for (int p : parents) {
    if (p < 0 || p >= self) throw Error(ErrorCode::kGraphCycle, "node refers to a later node");
    any = any || nodes_[static_cast<std::size_t>(p)].requires_grad;
  }
  Node node;
  node.grad = Tensor(value.shape);
  node.value = std::move(value);
  node.parents = std::move(parents);
  node.requires_grad = any && backprop != nullptr;
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{self};
}

void Tape::backward(Var root) {
  Node& r = nodes_.at(static_cast<std::size_t>(root.id));
  if (r.value.size() != 1) throw Error(ErrorCode::kShapeMismatch, "backward root must be scalar");
  for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
  r.grad.data[0] = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.requires_grad && n.backprop) n.backprop(*this, id);
  }
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kShapeMismatch, what);
}

void accumulate(Tape& tape, int id, const Tensor& g) {
  if (!tape.needs(id)) return;
  Tensor& dst = tape.grad_ref(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst.data[i] += g.data[i];
}

}  // namespace

Var conv2d(Tape& tape, Var x, Var w, Var b) {
  const Tensor& in = tape.value(x);
  const Tensor& k = tape.value(w);
  const Tensor& bias = tape.value(b);
  require(in.shape.size() == 3 && k.shape.size() == 4 && bias.shape.size() == 1,
          "conv2d expects [C,H,W], [O,C,k,k], [O]");
  const int cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const int cout = k.dim(0), ks = k.dim(2);
  require(k.dim(1) == cin && k.dim(3) == ks && bias.dim(0) == cout && ks % 2 == 1,
          "conv2d kernel does not match input channels");
  const int pad = ks / 2;
  Tensor out({cout, h, wd});
  auto in_at = [=](int c, int y, int xx) { return (static_cast<std::size_t>(c) * h + y) * wd + xx; };
  auto k_at = [=](int o, int c, int ky, int kx) {
    return ((static_cast<std::size_t>(o) * cin + c) * ks + ky) * ks + kx;
  };
  for (int o = 0; o < cout; ++o) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < wd; ++xx) {
        double s = bias[static_cast<std::size_t>(o)];
        for (int c = 0; c < cin; ++c) {
          for (int ky = 0; ky < ks; ++ky) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < ks; ++kx) {
              const int sx = xx + kx - pad;
              if (sx < 0 || sx >= wd) continue;
              s += k[k_at(o, c, ky, kx)] * in[in_at(c, sy, sx)];
            }
          }
        }
        out[(static_cast<std::size_t>(o) * h + y) * wd + xx] = s;
      }
    }
  }
  return tape.record(std::move(out), {x.id, w.id, b.id}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(Var{self});
    const Tensor& in = t.value(Var{x.id});
    const Tensor& k = t.value(Var{w.id});
    Tensor gx(in.shape), gw(k.shape), gb({cout});
    for (int o = 0; o < cout; ++o) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < wd; ++xx) {
          const double go = g[(static_cast<std::size_t>(o) * h + y) * wd + xx];
          if (go == 0.0) continue;
          gb[static_cast<std::size_t>(o)] += go;
          for (int c = 0; c < cin; ++c) {
            for (int ky = 0; ky < ks; ++ky) {
              const int sy = y + ky - pad;
              if (sy < 0 || sy >= h) continue;
              for (int kx = 0; kx < ks; ++kx) {
                const int sx = xx + kx - pad;
                if (sx < 0 || sx >= wd) continue;
                gw[k_at(o, c, ky, kx)] += go * in[in_at(c, sy, sx)];
                gx[in_at(c, sy, sx)] += go * k[k_at(o, c, ky, kx)];
              }
            }
          }
        }
      }
    }
    accumulate(t, x.id, gx);
    accumulate(t, w.id, gw);
    accumulate(t, b.id, gb);
  });
}

Var relu(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  Tensor out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] > 0.0 ? in[i] : 0.0;
    tape.note_kink_distance(std::abs(in[i]));
  }
  return tape.record(std::move(out), {x.id}, [x](Tape& t, int self) {
    const Tensor& g = t.grad(Var{self});
    const Tensor& in = t.value(x);
    Tensor gx(in.shape);
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] = in[i] > 0.0 ? g[i] : 0.0;
    accumulate(t, x.id, gx);
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  require(va.shape == vb.shape, "add shape mismatch");
  Tensor out(va.shape);
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] + vb[i];
  return tape.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    const Tensor g = t.grad(Var{self});
    accumulate(t, a.id, g);
    accumulate(t, b.id, g);
  });
}

Var sub(Tape& tape, Var a, Var b) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  require(va.shape == vb.shape, "sub shape mismatch");
  Tensor out(va.shape);
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] - vb[i];
  return tape.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, int self) {
    Tensor g = t.grad(Var{self});
    accumulate(t, a.id, g);
    for (auto& v : g.data) v = -v;
    accumulate(t, b.id, g);
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor out = tape.value(x);
  for (auto& v : out.data) v *= factor;
  return tape.record(std::move(out), {x.id}, [x, factor](Tape& t, int self) {
    Tensor g = t.grad(Var{self});
    for (auto& v : g.data) v *= factor;
    accumulate(t, x.id, g);
  });
}

Var stop_gradient(Tape& tape, Var x) { return tape.record(tape.value(x), {x.id}, nullptr); }

Var mean_spatial(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  require(in.shape.size() == 3, "mean_spatial expects [C,H,W]");
  const int c = in.dim(0);
  const std::size_t plane = static_cast<std::size_t>(in.dim(1)) * static_cast<std::size_t>(in.dim(2));
  Tensor out({c});
  for (int i = 0; i < c; ++i) {
    double s = 0.0;
    for (std::size_t p = 0; p < plane; ++p) s += in[static_cast<std::size_t>(i) * plane + p];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(plane);
  }
  return tape.record(std::move(out), {x.id}, [x, c, plane](Tape& t, int self) {
    const Tensor& g = t.grad(Var{self});
    Tensor gx(t.value(x).shape);
    for (int i = 0; i < c; ++i) {
      const double v = g[static_cast<std::size_t>(i)] / static_cast<double>(plane);
      for (std::size_t p = 0; p < plane; ++p) gx[static_cast<std::size_t>(i) * plane + p] = v;
    }
    accumulate(t, x.id, gx);
  });
}

Var linear(Tape& tape, Var x, Var w, Var b) {
  const Tensor& in = tape.value(x);
  const Tensor& m = tape.value(w);
  const Tensor& bias = tape.value(b);
  require(in.shape.size() == 1 && m.shape.size() == 2 && bias.shape.size() == 1 &&
              m.dim(1) == in.dim(0) && bias.dim(0) == m.dim(0),
          "linear shape mismatch");
  const int n_out = m.dim(0), n_in = m.dim(1);
  Tensor out({n_out});
  for (int o = 0; o < n_out; ++o) {
    double s = bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < n_in; ++i) s += m[static_cast<std::size_t>(o * n_in + i)] * in[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(o)] = s;
  }
  return tape.record(std::move(out), {x.id, w.id, b.id}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(Var{self});
    const Tensor& in = t.value(x);
    const Tensor& m = t.value(w);
    Tensor gx(in.shape), gw(m.shape), gb({n_out});
    for (int o = 0; o < n_out; ++o) {
      const double go = g[static_cast<std::size_t>(o)];
      gb[static_cast<std::size_t>(o)] = go;
      for (int i = 0; i < n_in; ++i) {
        gw[static_cast<std::size_t>(o * n_in + i)] = go * in[static_cast<std::size_t>(i)];
        gx[static_cast<std::size_t>(i)] += go * m[static_cast<std::size_t>(o * n_in + i)];
      }
    }
    accumulate(t, x.id, gx);
    accumulate(t, w.id, gw);
    accumulate(t, b.id, gb);
  });
}

Var select_channel(Tape& tape, Var x, int channel) {
  const Tensor& in = tape.value(x);
  require(in.shape.size() == 3 && channel >= 0 && channel < in.dim(0), "select_channel out of range");
  const std::size_t plane = static_cast<std::size_t>(in.dim(1)) * static_cast<std::size_t>(in.dim(2));
  Tensor out({in.dim(1), in.dim(2)});
  const std::size_t offset = static_cast<std::size_t>(channel) * plane;
  std::copy_n(in.data.begin() + static_cast<std::ptrdiff_t>(offset), plane, out.data.begin());
  return tape.record(std::move(out), {x.id}, [x, offset, plane](Tape& t, int self) {
    const Tensor& g = t.grad(Var{self});
    Tensor gx(t.value(x).shape);
    std::copy_n(g.data.begin(), plane, gx.data.begin() + static_cast<std::ptrdiff_t>(offset));
    accumulate(t, x.id, gx);
  });
}

Var bce_with_logits(Tape& tape, Var logits, const Tensor& target) {
  const Tensor& z = tape.value(logits);
  require(z.size() == target.size(), "bce target size mismatch");
  const double n = static_cast<double>(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += softplus(z[i]) - z[i] * target[i];
  return tape.record(Tensor::scalar(s / n), {logits.id}, [logits, target, n](Tape& t, int self) {
    const double g = t.grad(Var{self})[0];
    const Tensor& z = t.value(logits);
    Tensor gz(z.shape);
    for (std::size_t i = 0; i < z.size(); ++i) gz[i] = g * (sigmoid(z[i]) - target[i]) / n;
    accumulate(t, logits.id, gz);
  });
}

Var softmax_cross_entropy(Tape& tape, Var logits, int label) {
  const Tensor& z = tape.value(logits);
  require(z.shape.size() == 1 && label >= 0 && label < z.dim(0), "softmax label out of range");
  const double top = *std::max_element(z.data.begin(), z.data.end());
  double sum = 0.0;
  for (double v : z.data) sum += std::exp(v - top);
  const double lse = top + std::log(sum);
  return tape.record(Tensor::scalar(lse - z[static_cast<std::size_t>(label)]), {logits.id},
                     [logits, label, lse](Tape& t, int self) {
                       const double g = t.grad(Var{self})[0];
                       const Tensor& z = t.value(logits);
                       Tensor gz(z.shape);
                       for (std::size_t i = 0; i < z.size(); ++i) {
                         gz[i] = g * (std::exp(z[i] - lse) - (static_cast<int>(i) == label ? 1.0 : 0.0));
                       }
                       accumulate(t, logits.id, gz);
                     });
}

Var smooth_l1(Tape& tape, Var x, const Tensor& target, double beta) {
  const Tensor& v = tape.value(x);
  require(v.size() == target.size(), "smooth_l1 target size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = std::abs(v[i] - target[i]);
    s += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
    tape.note_kink_distance(std::abs(d - beta));
  }
  return tape.record(Tensor::scalar(s), {x.id}, [x, target, beta](Tape& t, int self) {
    const double g = t.grad(Var{self})[0];
    const Tensor& v = t.value(x);
    Tensor gx(v.shape);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - target[i];
      gx[i] = g * (std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : -1.0));
    }
    accumulate(t, x.id, gx);
  });
}

Var probability_difference_bce(Tape& tape, Var a, Var b, const Tensor& target, double eps) {
  const Tensor& va = tape.value(a);
  const Tensor& vb = tape.value(b);
  require(va.shape == vb.shape && va.size() == target.size(), "probability loss shape mismatch");
  const double n = static_cast<double>(va.size());
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double p = std::clamp(sigmoid(va[i]) - sigmoid(vb[i]), eps, 1.0 - eps);
    s -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
  }
  return tape.record(Tensor::scalar(s / n), {a.id, b.id}, [=](Tape& t, int self) {
    const double g = t.grad(Var{self})[0];
    const Tensor& va = t.value(a);
    const Tensor& vb = t.value(b);
    Tensor ga(va.shape), gb(vb.shape);
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double sa = sigmoid(va[i]);
      const double sb = sigmoid(vb[i]);
      const double p = sa - sb;
      if (p <= eps || p >= 1.0 - eps) continue;
      const double dp = g * (-target[i] / p + (1.0 - target[i]) / (1.0 - p)) / n;
      ga[i] = dp * sa * (1.0 - sa);
      gb[i] = -dp * sb * (1.0 - sb);
    }
    accumulate(t, a.id, ga);
    accumulate(t, b.id, gb);
  });
}

}  // namespace amodal::orcnn
