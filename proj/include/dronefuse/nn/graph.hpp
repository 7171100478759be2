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
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dronefuse/nn/parameter.hpp"
#include "dronefuse/nn/tensor.hpp"

namespace dronefuse::nn {

/// Handle to a node on a Graph.
struct Var {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so walking
/// them backwards is a valid topological order. One Graph serves one
/// forward/backward pass and is owned by a single thread; several graphs may
/// read the same ParameterStore concurrently.
class Graph {
 public:
  Graph() = default;
  /// With track_grad = false, parameter leaves do not require gradients and
  /// no backward closures are kept (inference).
  explicit Graph(bool track_grad) : track_grad_(track_grad) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Non-differentiable input. The `_ref` form borrows the tensor, which must
  /// outlive the graph.
  Var constant(Tensor t);
  Var constant_ref(const Tensor& t);
  /// Differentiable leaf owned by the graph (used by grad_check).
  Var variable(Tensor t);
  /// Leaf bound to a parameter; one node per parameter per graph.
  Var param(const Parameter& p);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward() target w.r.t. v (zeros if v was not
  /// reached).
  Tensor grad(Var v) const;

  /// Seeds d(target)/d(target) = seed; target must be a single element.
  void backward(Var target, double seed = 1.0);

  /// Adds the parameter gradients of this pass into `out`.
  void accumulate_param_grads(GradBuffer& out) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::uint64_t mult_adds() const { return mult_adds_; }
  void count_mult_adds(std::uint64_t n) { mult_adds_ += n; }

  // Op-construction interface.
  using BackwardFn = std::function<void(Graph&, std::uint32_t self)>;
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  /// Gradient slot of a node for accumulation, allocated on first use.
  std::vector<double>& grad_slot(std::uint32_t id);
  const std::vector<double>& grad_of(std::uint32_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor own;
    const Tensor* ref = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    const Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::uint64_t mult_adds_ = 0;
  bool track_grad_ = true;
};

// Differentiable operations. Shapes are checked and violations raise
// DimensionError (or ConfigError for invalid hyperparameters).
namespace ops {

Var add(Graph& g, Var a, Var b);
Var scale(Graph& g, Var x, double c);
Var relu(Graph& g, Var x);
Var sigmoid(Graph& g, Var x);

/// x [d_in] or [T, d_in], w [d_out, d_in], b [d_out] (b may be invalid).
Var linear(Graph& g, Var x, Var w, Var b);

/// x [C_in, L], w [C_out, C_in, k], b [C_out].
Var conv1d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t padding);
/// x [C_in, H, W], w [C_out, C_in, k, k], b [C_out].
Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t stride, std::size_t padding);

/// [C, ...spatial] -> [C].
Var global_avg_pool(Graph& g, Var x);
/// x [C, ...spatial] scaled per channel by gate [C].
Var scale_channels(Graph& g, Var x, Var gate);

/// Normalizes the last axis of x ([d] or [T, d]).
Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps = 1e-5);

/// Inverted dropout. The keep mask for element i is a counter-based draw on
/// (key, i). Identity when !train or p == 0. p must lie in [0, 1).
Var dropout(Graph& g, Var x, double p, bool train, std::uint64_t key);

/// Scaled dot-product attention over n_heads column blocks of q, k, v
/// (each [T, d]); returns concatenated heads [T, d].
Var attention(Graph& g, Var q, Var k, Var v, std::size_t n_heads);

/// Rows [d] -> [T, d].
Var stack_rows(Graph& g, std::span<const Var> rows);
/// [T, d] -> [d], mean over rows.
Var mean_rows(Graph& g, Var x);
/// Row r of x [R, d] -> [d].
Var row(Graph& g, Var x, std::size_t r);
/// Reinterprets the shape (same element count).
Var reshape(Graph& g, Var x, Shape shape);

/// -log softmax(logits)[label], shape [1]. Throws IndexError on a bad label.
Var cross_entropy(Graph& g, Var logits, std::size_t label);
/// sum_i weights[i] * x[i], shape [1].
Var weighted_sum(Graph& g, Var x, std::span<const double> weights);
/// Sum of all elements, shape [1].
Var sum(Graph& g, Var x);

}  // namespace ops

/// Plain (non-graph) helpers.
std::vector<double> softmax(std::span<const double> logits);
double cross_entropy_value(std::span<const double> logits, std::size_t label);

}  // namespace dronefuse::nn
