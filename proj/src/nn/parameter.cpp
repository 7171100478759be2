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
#include "dronefuse/nn/parameter.hpp"

#include <algorithm>
#include <cmath>

#include "dronefuse/error.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::nn {

Parameter& ParameterStore::add(const std::string& name, Shape shape, Init init, std::size_t fan_in,
                               std::size_t fan_out, std::uint64_t seed) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Parameter p;
  p.name = name;
  p.value = Tensor(std::move(shape));
  p.index = params_.size();
  KeyedStream rng{seed, hash_string(name)};
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Ones:
      std::fill(p.value.data.begin(), p.value.data.end(), 1.0);
      break;
    case Init::HeUniform: {
      const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
      for (double& v : p.value.data) v = rng.uniform(-bound, bound);
      break;
    }
    case Init::XavierUniform: {
      const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in + fan_out, 1)));
      for (double& v : p.value.data) v = rng.uniform(-bound, bound);
      break;
    }
    case Init::Normal002:
      for (double& v : p.value.data) v = 0.02 * rng.normal();
      break;
  }
  by_name_.emplace(name, p.index);
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &params_[it->second];
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> ParameterStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParameterStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape != params_[i].value.shape) {
      throw DimensionError("restore: shape mismatch for '" + params_[i].name + "'");
    }
    params_[i].value = values[i];
  }
}

GradBuffer::GradBuffer(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (const auto& p : store) grads_.emplace_back(p.value.size(), 0.0);
}

void GradBuffer::zero() {
  for (auto& g : grads_) std::fill(g.begin(), g.end(), 0.0);
}

void GradBuffer::add(const GradBuffer& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i)
    for (std::size_t j = 0; j < grads_[i].size(); ++j) grads_[i][j] += other.grads_[i][j];
}

void GradBuffer::scale(double c) {
  for (auto& g : grads_)
    for (double& v : g) v *= c;
}

bool GradBuffer::all_finite() const {
  for (const auto& g : grads_)
    for (double v : g)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace dronefuse::nn
