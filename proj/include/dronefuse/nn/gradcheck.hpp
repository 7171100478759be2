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
#include <string>
#include <vector>

#include "dronefuse/nn/graph.hpp"

namespace dronefuse::nn {

/// |a - n| / max(|a|, |n|, 1e-8).
double relative_error(double analytic, double numeric);

/// Central differences (f(x+eps) - f(x-eps)) / (2 eps) per coordinate
/// against a supplied analytic gradient; returns the max relative error.
double grad_check(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                  std::span<const double> analytic, double eps = 1e-5);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "<input or parameter name>[index]"
};

/// Scalar function of graph leaves.
using GraphFunction = std::function<Var(Graph&, std::span<const Var>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// 0 checks every coordinate; otherwise this many coordinates per tensor
  /// are sampled with a stream keyed by `seed`.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

/// Checks d f / d inputs.
GradCheckResult grad_check(const GraphFunction& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

/// Checks d f / d theta for every trainable parameter of `store`; f must
/// bind parameters through Graph::param. Parameters are perturbed in place
/// and restored.
GradCheckResult grad_check_parameters(ParameterStore& store, const std::function<Var(Graph&)>& f,
                                      const GradCheckOptions& options = {});

}  // namespace dronefuse::nn
