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
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "dronefuse/nn/tensor.hpp"

namespace dronefuse::nn {

struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
  std::size_t index = 0;  // position in the owning store
};

enum class Init { Zeros, Ones, HeUniform, XavierUniform, Normal002 };

/// Ordered, name-unique collection of parameters with stable addresses.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  /// Adds a parameter initialized from a stream keyed by (seed, name), so
  /// values do not depend on construction order.
  Parameter& add(const std::string& name, Shape shape, Init init, std::size_t fan_in,
                 std::size_t fan_out, std::uint64_t seed);

  Parameter& at(std::size_t i) { return params_[i]; }
  const Parameter& at(std::size_t i) const { return params_[i]; }
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

/// One gradient array per parameter, aligned with store indices.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParameterStore& store);

  std::vector<double>& operator[](std::size_t i) { return grads_[i]; }
  const std::vector<double>& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const { return grads_.size(); }

  void zero();
  void add(const GradBuffer& other);
  void scale(double c);
  bool all_finite() const;

 private:
  std::vector<std::vector<double>> grads_;
};

}  // namespace dronefuse::nn
