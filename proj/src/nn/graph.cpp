/*
 * Copyright 2026 The dronefuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "dronefuse/nn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "dronefuse/error.hpp"
#include "dronefuse/nn/kernels.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::nn {

std::string to_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != element_count(shape)) {
    throw DimensionError("tensor: " + std::to_string(data.size()) + " values for shape " +
                         to_string(shape));
  }
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Var Graph::constant(Tensor t) {
  Node n;
  n.own = std::move(t);
  nodes_.push_back(std::move(n));
  return {static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant_ref(const Tensor& t) {
  Node n;
  n.ref = &t;
  nodes_.push_back(std::move(n));
  return {static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::variable(Tensor t) {
  Node n;
  n.own = std::move(t);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return {it->second};
  Node n;
  n.ref = &p.value;
  n.requires_grad = p.trainable && track_grad_;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return {id};
}

const Tensor& Graph::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.ref ? *n.ref : n.own;
}

Tensor Graph::grad(Var v) const {
  Tensor t(value(v).shape);
  const auto& g = nodes_.at(v.id).grad;
  if (!g.empty()) t.data = g;
  return t;
}

std::vector<double>& Graph::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign((n.ref ? *n.ref : n.own).size(), 0.0);
  return n.grad;
}

Var Graph::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Graph::push(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw DivergenceError("non-finite activation at graph node " + std::to_string(nodes_.size()) +
                          " (shape " + to_string(value.shape) + ")");
  }
  Node n;
  n.own = std::move(value);
  for (Var v : inputs) {
    if (v.valid() && nodes_[v.id].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::backward(Var target, double seed) {
  if (value(target).size() != 1) {
    throw DimensionError("backward: target must be a single element, got shape " +
                         to_string(value(target).shape));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_slot(target.id)[0] = seed;
  for (std::uint32_t id = target.id + 1; id-- > 0;) {
    if (!nodes_[id].grad.empty() && nodes_[id].backward) nodes_[id].backward(*this, id);
  }
}

void Graph::accumulate_param_grads(GradBuffer& out) const {
  for (const auto& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    auto& dst = out[n.param->index];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double s = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : p) v /= s;
  return p;
}

double cross_entropy_value(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw IndexError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  if (logits.size() < 2) throw DimensionError("cross_entropy: need at least 2 classes");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double v : logits) s += std::exp(v - mx);
  return std::log(s) + mx - logits[label];
}

namespace ops {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_same(const Shape& a, const Shape& b, const char* op) {
  require(a == b, std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

std::size_t spatial_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t i = 1; i < s.size(); ++i) n *= s[i];
  return n;
}

}  // namespace

Var add(Graph& g, Var a, Var b) {
  const Tensor& ta = g.value(a);
  const Tensor& tb = g.value(b);
  require_same(ta.shape, tb.shape, "add");
  Tensor y = ta;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += tb[i];
  const auto ai = a.id, bi = b.id;
  return g.push(std::move(y), {a, b}, [ai, bi](Graph& g, std::uint32_t self) {
    for (auto in : {ai, bi}) {
      if (!g.requires_grad({in})) continue;
      auto& gi = g.grad_slot(in);
      const auto& gy = g.grad_of(self);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += gy[i];
    }
  });
}

Var scale(Graph& g, Var x, double c) {
  Tensor y = g.value(x);
  for (double& v : y.data) v *= c;
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi, c](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += c * gy[i];
  });
}

Var relu(Graph& g, Var x) {
  Tensor y = g.value(x);
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi](Graph& g, std::uint32_t self) {
    const Tensor& xv = g.value({xi});
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0.0) gx[i] += gy[i];
  });
}

Var sigmoid(Graph& g, Var x) {
  Tensor y = g.value(x);
  for (double& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi](Graph& g, std::uint32_t self) {
    const Tensor& yv = g.value({self});
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * yv[i] * (1.0 - yv[i]);
  });
}

Var linear(Graph& g, Var x, Var w, Var b) {
  const Tensor& tx = g.value(x);
  const Tensor& tw = g.value(w);
  require(tw.rank() == 2, "linear: weight must be [d_out, d_in], got " + to_string(tw.shape));
  require(tx.rank() == 1 || tx.rank() == 2, "linear: input must be [d] or [T, d]");
  const std::size_t d_out = tw.dim(0), d_in = tw.dim(1);
  const std::size_t rows = tx.rank() == 1 ? 1 : tx.dim(0);
  require(tx.shape.back() == d_in, "linear: input " + to_string(tx.shape) + " incompatible with weight " +
                                       to_string(tw.shape));
  const Tensor* tb = b.valid() ? &g.value(b) : nullptr;
  if (tb) require(tb->shape == Shape{d_out}, "linear: bias must be [d_out]");
  Tensor y(tx.rank() == 1 ? Shape{d_out} : Shape{rows, d_out});
  for (std::size_t t = 0; t < rows; ++t) {
    const double* xr = &tx.data[t * d_in];
    for (std::size_t o = 0; o < d_out; ++o) {
      const double* wr = &tw.data[o * d_in];
      double acc = tb ? (*tb)[o] : 0.0;
      for (std::size_t i = 0; i < d_in; ++i) acc += wr[i] * xr[i];
      y[t * d_out + o] = acc;
    }
  }
  g.count_mult_adds(rows * d_in * d_out);
  const auto xi = x.id, wi = w.id, bi = b.id;
  const bool has_b = b.valid();
  return g.push(std::move(y), {x, w, b}, [=](Graph& g, std::uint32_t self) {
    const Tensor& xv = g.value({xi});
    const Tensor& wv = g.value({wi});
    const auto& gy = g.grad_of(self);
    if (g.requires_grad({xi})) {
      auto& gx = g.grad_slot(xi);
      for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t o = 0; o < d_out; ++o) {
          const double go = gy[t * d_out + o];
          const double* wr = &wv.data[o * d_in];
          for (std::size_t i = 0; i < d_in; ++i) gx[t * d_in + i] += go * wr[i];
        }
    }
    if (g.requires_grad({wi})) {
      auto& gw = g.grad_slot(wi);
      for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t o = 0; o < d_out; ++o) {
          const double go = gy[t * d_out + o];
          const double* xr = &xv.data[t * d_in];
          for (std::size_t i = 0; i < d_in; ++i) gw[o * d_in + i] += go * xr[i];
        }
    }
    if (has_b && g.requires_grad({bi})) {
      auto& gb = g.grad_slot(bi);
      for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t o = 0; o < d_out; ++o) gb[o] += gy[t * d_out + o];
    }
  });
}

Var conv1d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t padding) {
  const Tensor& tx = g.value(x);
  const Tensor& tw = g.value(w);
  require(tx.rank() == 2, "conv1d: input must be [C_in, L], got " + to_string(tx.shape));
  require(tw.rank() == 3, "conv1d: weight must be [C_out, C_in, k], got " + to_string(tw.shape));
  require(tw.dim(1) == tx.dim(0), "conv1d: weight " + to_string(tw.shape) + " vs input " + to_string(tx.shape));
  require(stride >= 1, "conv1d: stride must be >= 1");
  const kernels::Conv1dShape s{tx.dim(0), tx.dim(1), tw.dim(0), tw.dim(2), stride, padding};
  require(s.kernel <= s.length + 2 * padding,
          "conv1d: kernel " + std::to_string(s.kernel) + " exceeds padded length " +
              std::to_string(s.length + 2 * padding));
  const Tensor* tb = b.valid() ? &g.value(b) : nullptr;
  if (tb) require(tb->shape == Shape{s.c_out}, "conv1d: bias must be [C_out]");
  Tensor y({s.c_out, s.out_length()});
  kernels::parallel::conv1d_forward(s, tx.data.data(), tw.data.data(), tb ? tb->data.data() : nullptr,
                                    y.data.data());
  g.count_mult_adds(s.c_out * s.out_length() * s.c_in * s.kernel);
  const auto xi = x.id, wi = w.id, bi = b.id;
  const bool has_b = b.valid();
  return g.push(std::move(y), {x, w, b}, [=](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    double* dx = g.requires_grad({xi}) ? g.grad_slot(xi).data() : nullptr;
    double* dw = g.requires_grad({wi}) ? g.grad_slot(wi).data() : nullptr;
    double* db = has_b && g.requires_grad({bi}) ? g.grad_slot(bi).data() : nullptr;
    kernels::parallel::conv1d_backward(s, g.value({xi}).data.data(), g.value({wi}).data.data(),
                                       gy.data(), dx, dw, db);
  });
}

Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t padding) {
  const Tensor& tx = g.value(x);
  const Tensor& tw = g.value(w);
  require(tx.rank() == 3, "conv2d: input must be [C_in, H, W], got " + to_string(tx.shape));
  require(tw.rank() == 4 && tw.dim(2) == tw.dim(3),
          "conv2d: weight must be [C_out, C_in, k, k], got " + to_string(tw.shape));
  require(tw.dim(1) == tx.dim(0), "conv2d: weight " + to_string(tw.shape) + " vs input " + to_string(tx.shape));
  require(stride >= 1, "conv2d: stride must be >= 1");
  const kernels::Conv2dShape s{tx.dim(0), tx.dim(1), tx.dim(2), tw.dim(0), tw.dim(2), stride, padding};
  require(s.kernel <= s.height + 2 * padding && s.kernel <= s.width + 2 * padding,
          "conv2d: kernel " + std::to_string(s.kernel) + " exceeds padded input " + to_string(tx.shape));
  const Tensor* tb = b.valid() ? &g.value(b) : nullptr;
  if (tb) require(tb->shape == Shape{s.c_out}, "conv2d: bias must be [C_out]");
  Tensor y({s.c_out, s.out_height(), s.out_width()});
  kernels::parallel::conv2d_forward(s, tx.data.data(), tw.data.data(), tb ? tb->data.data() : nullptr,
                                    y.data.data());
  g.count_mult_adds(s.c_out * s.out_height() * s.out_width() * s.c_in * s.kernel * s.kernel);
  const auto xi = x.id, wi = w.id, bi = b.id;
  const bool has_b = b.valid();
  return g.push(std::move(y), {x, w, b}, [=](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    double* dx = g.requires_grad({xi}) ? g.grad_slot(xi).data() : nullptr;
    double* dw = g.requires_grad({wi}) ? g.grad_slot(wi).data() : nullptr;
    double* db = has_b && g.requires_grad({bi}) ? g.grad_slot(bi).data() : nullptr;
    kernels::parallel::conv2d_backward(s, g.value({xi}).data.data(), g.value({wi}).data.data(),
                                       gy.data(), dx, dw, db);
  });
}

Var global_avg_pool(Graph& g, Var x) {
  const Tensor& tx = g.value(x);
  require(tx.rank() >= 2, "global_avg_pool: input must be [C, ...spatial]");
  const std::size_t c = tx.dim(0), n = spatial_size(tx.shape);
  Tensor y({c});
  for (std::size_t i = 0; i < c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += tx[i * n + j];
    y[i] = s / static_cast<double>(n);
  }
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi, c, n](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += gy[i] * inv;
  });
}

Var scale_channels(Graph& g, Var x, Var gate) {
  const Tensor& tx = g.value(x);
  const Tensor& tg = g.value(gate);
  require(tx.rank() >= 2 && tg.shape == Shape{tx.dim(0)},
          "scale_channels: gate " + to_string(tg.shape) + " vs input " + to_string(tx.shape));
  const std::size_t c = tx.dim(0), n = spatial_size(tx.shape);
  Tensor y = tx;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] *= tg[i];
  const auto xi = x.id, gi = gate.id;
  return g.push(std::move(y), {x, gate}, [=](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    const Tensor& xv = g.value({xi});
    const Tensor& gv = g.value({gi});
    if (g.requires_grad({xi})) {
      auto& gx = g.grad_slot(xi);
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += gy[i * n + j] * gv[i];
    }
    if (g.requires_grad({gi})) {
      auto& gg = g.grad_slot(gi);
      for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += gy[i * n + j] * xv[i * n + j];
        gg[i] += s;
      }
    }
  });
}

Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps) {
  const Tensor& tx = g.value(x);
  require(tx.rank() == 1 || tx.rank() == 2, "layer_norm: input must be [d] or [T, d]");
  const std::size_t d = tx.shape.back();
  const std::size_t rows = tx.size() / d;
  require(g.value(gain).shape == Shape{d} && g.value(bias).shape == Shape{d},
          "layer_norm: gain and bias must be [" + std::to_string(d) + "]");
  const Tensor& tgain = g.value(gain);
  const Tensor& tbias = g.value(bias);
  Tensor y(tx.shape);
  std::vector<double> xhat(tx.size()), rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &tx.data[r * d];
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) {
      xhat[r * d + i] = (xr[i] - mean) * rstd[r];
      y[r * d + i] = xhat[r * d + i] * tgain[i] + tbias[i];
    }
  }
  const auto xi = x.id, gni = gain.id, bi = bias.id;
  return g.push(std::move(y), {x, gain, bias},
                [=, xhat = std::move(xhat), rstd = std::move(rstd)](Graph& g, std::uint32_t self) {
                  const auto& gy = g.grad_of(self);
                  const Tensor& gv = g.value({gni});
                  if (g.requires_grad({xi})) {
                    auto& gx = g.grad_slot(xi);
                    for (std::size_t r = 0; r < rows; ++r) {
                      double m1 = 0.0, m2 = 0.0;
                      for (std::size_t i = 0; i < d; ++i) {
                        const double dxh = gy[r * d + i] * gv[i];
                        m1 += dxh;
                        m2 += dxh * xhat[r * d + i];
                      }
                      m1 /= static_cast<double>(d);
                      m2 /= static_cast<double>(d);
                      for (std::size_t i = 0; i < d; ++i) {
                        const double dxh = gy[r * d + i] * gv[i];
                        gx[r * d + i] += rstd[r] * (dxh - m1 - xhat[r * d + i] * m2);
                      }
                    }
                  }
                  if (g.requires_grad({gni})) {
                    auto& gg = g.grad_slot(gni);
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t i = 0; i < d; ++i) gg[i] += gy[r * d + i] * xhat[r * d + i];
                  }
                  if (g.requires_grad({bi})) {
                    auto& gb = g.grad_slot(bi);
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t i = 0; i < d; ++i) gb[i] += gy[r * d + i];
                  }
                });
}

Var dropout(Graph& g, Var x, double p, bool train, std::uint64_t key) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(p));
  }
  if (!train || p == 0.0) return x;
  const Tensor& tx = g.value(x);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(tx.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = counter_uniform(key, i) >= p ? keep_scale : 0.0;
  Tensor y = tx;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi, mask = std::move(mask)](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * mask[i];
  });
}

Var attention(Graph& g, Var q, Var k, Var v, std::size_t n_heads) {
  const Tensor& tq = g.value(q);
  const Tensor& tk = g.value(k);
  const Tensor& tv = g.value(v);
  require(tq.rank() == 2, "attention: q must be [T, d]");
  require_same(tq.shape, tk.shape, "attention");
  require_same(tq.shape, tv.shape, "attention");
  const std::size_t T = tq.dim(0), d = tq.dim(1);
  if (n_heads == 0 || d % n_heads != 0) {
    throw ConfigError("attention: embedding dim " + std::to_string(d) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  const std::size_t dh = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> probs(n_heads * T * T);
  Tensor y({T, d});
  std::vector<double> row_scores(T);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const std::size_t c0 = h * dh;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t s = 0; s < T; ++s) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dh; ++j) acc += tq[t * d + c0 + j] * tk[s * d + c0 + j];
        row_scores[s] = acc * inv_sqrt;
      }
      const auto p = softmax(row_scores);
      std::copy(p.begin(), p.end(), probs.begin() + static_cast<std::ptrdiff_t>((h * T + t) * T));
      for (std::size_t j = 0; j < dh; ++j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < T; ++s) acc += p[s] * tv[s * d + c0 + j];
        y[t * d + c0 + j] = acc;
      }
    }
  }
  g.count_mult_adds(2 * T * T * d);
  const auto qi = q.id, ki = k.id, vi = v.id;
  return g.push(std::move(y), {q, k, v}, [=, probs = std::move(probs)](Graph& g, std::uint32_t self) {
    const auto& gy = g.grad_of(self);
    const Tensor& qv = g.value({qi});
    const Tensor& kv = g.value({ki});
    const Tensor& vv = g.value({vi});
    std::vector<double> dq(T * d, 0.0), dk(T * d, 0.0), dv(T * d, 0.0), dp(T), ds(T);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t t = 0; t < T; ++t) {
        const double* p = &probs[(h * T + t) * T];
        double dot = 0.0;
        for (std::size_t s = 0; s < T; ++s) {
          double acc = 0.0;
          for (std::size_t j = 0; j < dh; ++j) {
            acc += gy[t * d + c0 + j] * vv[s * d + c0 + j];
            dv[s * d + c0 + j] += p[s] * gy[t * d + c0 + j];
          }
          dp[s] = acc;
          dot += p[s] * acc;
        }
        for (std::size_t s = 0; s < T; ++s) ds[s] = p[s] * (dp[s] - dot) * inv_sqrt;
        for (std::size_t s = 0; s < T; ++s)
          for (std::size_t j = 0; j < dh; ++j) {
            dq[t * d + c0 + j] += ds[s] * kv[s * d + c0 + j];
            dk[s * d + c0 + j] += ds[s] * qv[t * d + c0 + j];
          }
      }
    }
    const std::pair<std::uint32_t, const std::vector<double>*> parts[] = {{qi, &dq}, {ki, &dk}, {vi, &dv}};
    for (const auto& [id, src] : parts) {
      if (!g.requires_grad({id})) continue;
      auto& dst = g.grad_slot(id);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += (*src)[i];
    }
  });
}

Var stack_rows(Graph& g, std::span<const Var> rows) {
  require(!rows.empty(), "stack_rows: no rows");
  const Shape s0 = g.value(rows[0]).shape;
  require(s0.size() == 1, "stack_rows: rows must be rank 1");
  const std::size_t d = s0[0];
  Tensor y({rows.size(), d});
  std::vector<std::uint32_t> ids;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Tensor& t = g.value(rows[r]);
    require_same(t.shape, s0, "stack_rows");
    std::copy(t.data.begin(), t.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(r * d));
    ids.push_back(rows[r].id);
  }
  return g.push(std::move(y), rows, [ids, d](Graph& g, std::uint32_t self) {
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (!g.requires_grad({ids[r]})) continue;
      auto& gi = g.grad_slot(ids[r]);
      const auto& gy = g.grad_of(self);
      for (std::size_t i = 0; i < d; ++i) gi[i] += gy[r * d + i];
    }
  });
}

Var mean_rows(Graph& g, Var x) {
  const Tensor& tx = g.value(x);
  require(tx.rank() == 2, "mean_rows: input must be [T, d]");
  const std::size_t T = tx.dim(0), d = tx.dim(1);
  Tensor y({d});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < d; ++i) y[i] += tx[t * d + i];
  for (double& v : y.data) v /= static_cast<double>(T);
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi, T, d](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    const double inv = 1.0 / static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < d; ++i) gx[t * d + i] += gy[i] * inv;
  });
}

Var row(Graph& g, Var x, std::size_t r) {
  const Tensor& tx = g.value(x);
  require(tx.rank() == 2, "row: input must be [R, d]");
  if (r >= tx.dim(0)) {
    throw IndexError("row: index " + std::to_string(r) + " out of range for " + to_string(tx.shape));
  }
  const std::size_t d = tx.dim(1);
  Tensor y({d});
  std::copy_n(tx.data.begin() + static_cast<std::ptrdiff_t>(r * d), d, y.data.begin());
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi, r, d](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += gy[i];
  });
}

Var reshape(Graph& g, Var x, Shape shape) {
  Tensor y = g.value(x);
  require(element_count(shape) == y.size(),
          "reshape: " + to_string(y.shape) + " cannot become " + to_string(shape));
  y.shape = std::move(shape);
  const auto xi = x.id;
  return g.push(std::move(y), {x}, [xi](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const auto& gy = g.grad_of(self);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
  });
}

Var cross_entropy(Graph& g, Var logits, std::size_t label) {
  const Tensor& tl = g.value(logits);
  require(tl.rank() == 1, "cross_entropy: logits must be [C]");
  const double loss = cross_entropy_value(tl.data, label);
  auto p = softmax(tl.data);
  const auto li = logits.id;
  return g.push(Tensor({1}, {loss}), {logits}, [li, label, p = std::move(p)](Graph& g, std::uint32_t self) {
    auto& gl = g.grad_slot(li);
    const double gy = g.grad_of(self)[0];
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += gy * (p[i] - (i == label ? 1.0 : 0.0));
  });
}

Var weighted_sum(Graph& g, Var x, std::span<const double> weights) {
  const Tensor& tx = g.value(x);
  require(weights.size() == tx.size(), "weighted_sum: weight count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) s += weights[i] * tx[i];
  const auto xi = x.id;
  std::vector<double> w(weights.begin(), weights.end());
  return g.push(Tensor({1}, {s}), {x}, [xi, w = std::move(w)](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const double gy = g.grad_of(self)[0];
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy * w[i];
  });
}

Var sum(Graph& g, Var x) {
  const Tensor& tx = g.value(x);
  double s = 0.0;
  for (double v : tx.data) s += v;
  const auto xi = x.id;
  return g.push(Tensor({1}, {s}), {x}, [xi](Graph& g, std::uint32_t self) {
    auto& gx = g.grad_slot(xi);
    const double gy = g.grad_of(self)[0];
    for (double& v : gx) v += gy;
  });
}

}  // namespace ops
}  // namespace dronefuse::nn
