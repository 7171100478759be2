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
#include "dronefuse/nn/adam.hpp"

#include <cmath>

#include "dronefuse/error.hpp"

namespace dronefuse::nn {

Adam::Adam(const ParameterStore& store, AdamConfig config) : config_(config) {
  m_.reserve(store.size());
  v_.reserve(store.size());
  for (const auto& p : store) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void Adam::step(ParameterStore& store, const GradBuffer& grads) {
  if (grads.size() != store.size() || m_.size() != store.size()) {
    throw DimensionError("adam: gradient/parameter count mismatch");
  }
  ++timestep_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(timestep_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(timestep_));
  const double lr = config_.learning_rate;
  const double decay = lr * config_.weight_decay;
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    if (!p.trainable) continue;
    const auto& g = grads[i];
    if (g.size() != p.value.size()) throw DimensionError("adam: gradient shape mismatch for '" + p.name + "'");
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      double& theta = p.value.data[j];
      theta -= decay * theta;
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      theta -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

}  // namespace dronefuse::nn
