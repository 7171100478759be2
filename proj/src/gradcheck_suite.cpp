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
#include "dronefuse/gradcheck_suite.hpp"

#include <cmath>

#include "dronefuse/model.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse {
namespace {

using nn::Graph;
using nn::Shape;
using nn::Tensor;
using nn::Var;

Tensor random_tensor(Shape shape, KeyedStream& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so relu kinks sit outside the stencil.
Tensor away_from_zero(Shape shape, KeyedStream& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
  return t;
}

// Random projection of a tensor-valued op down to a scalar.
Var project(Graph& g, Var y, std::uint64_t key) {
  KeyedStream rng{key, hash_string("projection")};
  std::vector<double> w(g.value(y).size());
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  return nn::ops::weighted_sum(g, y, w);
}

LayerCheck check(const std::string& name, const nn::GraphFunction& f, const std::vector<Tensor>& inputs,
                 std::uint64_t seed) {
  const auto key = hash_key({seed, hash_string(name)});
  nn::GradCheckOptions o;
  o.seed = key;
  auto projected = [&](Graph& g, std::span<const Var> v) { return project(g, f(g, v), key); };
  return {name, nn::grad_check(projected, inputs, o), kLayerTolerance};
}

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.acoustic.small_kernel = 3;
  c.acoustic.large_kernel = 5;
  c.acoustic.downsample_kernel = 5;
  c.acoustic.downsample_stride = 2;
  c.acoustic.num_se_blocks = 2;
  c.acoustic.widths = {4, 4};
  c.acoustic.embed_dim = 8;
  c.range_doppler.kernels = {3, 3};
  c.range_doppler.widths = {4, 8};
  c.range_doppler.embed_dim = 8;
  c.fusion.n_heads = 2;
  c.fusion.embed_dim = 8;
  c.fusion.ffn_hidden = 12;
  c.se_reduction = 2;
  c.head_hidden = 6;
  c.dropout = 0.2;
  c.acoustic_length = 32;
  c.rd_height = 6;
  c.rd_width = 8;
  return c;
}

}  // namespace

LayerCheck end_to_end_gradcheck(std::uint64_t seed, std::size_t coords_per_tensor) {
  const auto cfg = tiny_config();
  model::FusionModel m(cfg, seed);
  KeyedStream rng{seed, hash_string("end_to_end")};
  std::vector<model::SampleInput> inputs(3);
  for (auto& in : inputs) {
    in.acoustic = random_tensor({1, cfg.acoustic_length}, rng);
    in.range_doppler = random_tensor({1, cfg.rd_height, cfg.rd_width}, rng, 0.0, 1.0);
  }
  const std::vector<model::Label> labels{{1, 2}, {0, 0}, {1, 4}};
  const model::LossConfig loss{0.7};
  auto f = [&](Graph& g) {
    std::vector<model::ForwardVars> outs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      outs.push_back(m.forward(g, inputs[i], {true, hash_key({seed, i})}));
    }
    return model::joint_loss(g, outs, labels, loss);
  };
  nn::GradCheckOptions o;
  o.max_coords_per_tensor = coords_per_tensor;
  o.seed = seed;
  return {"model.joint_loss", nn::grad_check_parameters(m.parameters(), f, o), kEndToEndTolerance};
}

std::vector<LayerCheck> run_gradcheck_suite(std::uint64_t seed) {
  namespace ops = nn::ops;
  KeyedStream rng{seed, hash_string("suite")};
  std::vector<LayerCheck> out;
  out.push_back(check("add", [](Graph& g, std::span<const Var> v) { return ops::add(g, v[0], v[1]); },
                      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, seed));
  out.push_back(check("scale", [](Graph& g, std::span<const Var> v) { return ops::scale(g, v[0], -1.7); },
                      {random_tensor({5}, rng)}, seed));
  out.push_back(check("relu", [](Graph& g, std::span<const Var> v) { return ops::relu(g, v[0]); },
                      {away_from_zero({4, 5}, rng)}, seed));
  out.push_back(check("sigmoid", [](Graph& g, std::span<const Var> v) { return ops::sigmoid(g, v[0]); },
                      {random_tensor({7}, rng, -3.0, 3.0)}, seed));
  out.push_back(check("linear.vector",
                      [](Graph& g, std::span<const Var> v) { return ops::linear(g, v[0], v[1], v[2]); },
                      {random_tensor({5}, rng), random_tensor({3, 5}, rng), random_tensor({3}, rng)}, seed));
  out.push_back(check("linear.rows",
                      [](Graph& g, std::span<const Var> v) { return ops::linear(g, v[0], v[1], v[2]); },
                      {random_tensor({4, 5}, rng), random_tensor({3, 5}, rng), random_tensor({3}, rng)}, seed));
  out.push_back(check("conv1d.stride1",
                      [](Graph& g, std::span<const Var> v) { return ops::conv1d(g, v[0], v[1], v[2], 1, 2); },
                      {random_tensor({2, 11}, rng), random_tensor({3, 2, 5}, rng), random_tensor({3}, rng)}, seed));
  out.push_back(check("conv1d.stride3",
                      [](Graph& g, std::span<const Var> v) { return ops::conv1d(g, v[0], v[1], v[2], 3, 1); },
                      {random_tensor({2, 13}, rng), random_tensor({3, 2, 4}, rng), random_tensor({3}, rng)}, seed));
  out.push_back(check("conv2d.stride1",
                      [](Graph& g, std::span<const Var> v) { return ops::conv2d(g, v[0], v[1], v[2], 1, 1); },
                      {random_tensor({2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)},
                      seed));
  out.push_back(check("conv2d.stride2",
                      [](Graph& g, std::span<const Var> v) { return ops::conv2d(g, v[0], v[1], v[2], 2, 1); },
                      {random_tensor({2, 7, 6}, rng), random_tensor({2, 2, 3, 3}, rng), random_tensor({2}, rng)},
                      seed));
  out.push_back(check("global_avg_pool",
                      [](Graph& g, std::span<const Var> v) { return ops::global_avg_pool(g, v[0]); },
                      {random_tensor({3, 4, 5}, rng)}, seed));
  out.push_back(check("scale_channels",
                      [](Graph& g, std::span<const Var> v) { return ops::scale_channels(g, v[0], v[1]); },
                      {random_tensor({3, 6}, rng), random_tensor({3}, rng)}, seed));
  out.push_back(check("layer_norm",
                      [](Graph& g, std::span<const Var> v) { return ops::layer_norm(g, v[0], v[1], v[2]); },
                      {random_tensor({3, 6}, rng), random_tensor({6}, rng, 0.5, 1.5), random_tensor({6}, rng)},
                      seed));
  out.push_back(check("dropout",
                      [seed](Graph& g, std::span<const Var> v) { return ops::dropout(g, v[0], 0.3, true, seed); },
                      {random_tensor({20}, rng)}, seed));
  out.push_back(check("attention",
                      [](Graph& g, std::span<const Var> v) { return ops::attention(g, v[0], v[1], v[2], 2); },
                      {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)}, seed));
  out.push_back(check("stack_rows",
                      [](Graph& g, std::span<const Var> v) {
                        const Var rows[] = {v[0], v[1], v[0]};
                        return ops::stack_rows(g, rows);
                      },
                      {random_tensor({4}, rng), random_tensor({4}, rng)}, seed));
  out.push_back(check("mean_rows", [](Graph& g, std::span<const Var> v) { return ops::mean_rows(g, v[0]); },
                      {random_tensor({3, 4}, rng)}, seed));
  out.push_back(check("row", [](Graph& g, std::span<const Var> v) { return ops::row(g, v[0], 1); },
                      {random_tensor({3, 4}, rng)}, seed));
  out.push_back(check("reshape", [](Graph& g, std::span<const Var> v) { return ops::reshape(g, v[0], {6, 2}); },
                      {random_tensor({3, 4}, rng)}, seed));
  out.push_back(check("cross_entropy",
                      [](Graph& g, std::span<const Var> v) { return ops::cross_entropy(g, v[0], 2); },
                      {random_tensor({5}, rng, -2.0, 2.0)}, seed));
  out.push_back(check("sum", [](Graph& g, std::span<const Var> v) { return ops::sum(g, v[0]); },
                      {random_tensor({2, 3}, rng)}, seed));
  out.push_back(end_to_end_gradcheck(seed));
  return out;
}

}  // namespace dronefuse
