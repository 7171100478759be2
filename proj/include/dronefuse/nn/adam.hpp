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
#include <vector>

#include "dronefuse/nn/parameter.hpp"

namespace dronefuse::nn {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Decoupled: theta <- theta - lr * weight_decay * theta before the
  /// moment update, never folded into the gradient.
  double weight_decay = 0.4;
};

/// Adam with bias-corrected moments. Owns one first/second moment array per
/// parameter of the store it was built for.
class Adam {
 public:
  Adam(const ParameterStore& store, AdamConfig config);

  /// Increments the timestep, then updates every trainable parameter.
  void step(ParameterStore& store, const GradBuffer& grads);

  std::uint64_t timestep() const { return timestep_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t timestep_ = 0;
};

}  // namespace dronefuse::nn
