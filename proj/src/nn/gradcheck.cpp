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
#include "dronefuse/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dronefuse/rng.hpp"

namespace dronefuse::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

double grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                  std::span<const double> analytic, double eps) {
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;
    worst = std::max(worst, relative_error(analytic[i], (fp - fm) / (2.0 * eps)));
  }
  return worst;
}

namespace {

std::vector<std::size_t> pick_coords(std::size_t n, const GradCheckOptions& o, std::uint64_t key) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (o.max_coords_per_tensor == 0 || o.max_coords_per_tensor >= n) return idx;
  KeyedStream rng{o.seed, key};
  shuffle_with(idx, rng);
  idx.resize(o.max_coords_per_tensor);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double eval_scalar(const GraphFunction& f, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.constant(t));
  return g.value(f(g, vars))[0];
}

}  // namespace

GradCheckResult grad_check(const GraphFunction& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Graph g;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(g.variable(t));
    const Var out = f(g, vars);
    g.backward(out);
    for (Var v : vars) analytic.push_back(g.grad(v));
  }
  GradCheckResult r;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i : pick_coords(inputs[k].size(), options, k)) {
      const double orig = probe[k][i];
      probe[k][i] = orig + options.eps;
      const double fp = eval_scalar(f, probe);
      probe[k][i] = orig - options.eps;
      const double fm = eval_scalar(f, probe);
      probe[k][i] = orig;
      const double e = relative_error(analytic[k][i], (fp - fm) / (2.0 * options.eps));
      ++r.coordinates;
      if (r.worst.empty() || e > r.max_relative_error) {
        r.max_relative_error = e;
        r.worst = "input" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

GradCheckResult grad_check_parameters(ParameterStore& store, const std::function<Var(Graph&)>& f,
                                      const GradCheckOptions& options) {
  GradBuffer analytic(store);
  {
    Graph g;
    g.backward(f(g));
    g.accumulate_param_grads(analytic);
  }
  auto eval = [&] {
    Graph g;
    return g.value(f(g))[0];
  };
  GradCheckResult r;
  for (auto& p : store) {
    if (!p.trainable) continue;
    for (std::size_t i : pick_coords(p.value.size(), options, hash_string(p.name))) {
      const double orig = p.value[i];
      p.value[i] = orig + options.eps;
      const double fp = eval();
      p.value[i] = orig - options.eps;
      const double fm = eval();
      p.value[i] = orig;
      const double e = relative_error(analytic[p.index][i], (fp - fm) / (2.0 * options.eps));
      ++r.coordinates;
      if (r.worst.empty() || e > r.max_relative_error) {
        r.max_relative_error = e;
        r.worst = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return r;
}

}  // namespace dronefuse::nn
