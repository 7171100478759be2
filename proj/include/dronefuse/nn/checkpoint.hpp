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

#include <filesystem>
#include <string>
#include <vector>

#include "dronefuse/nn/parameter.hpp"

namespace dronefuse::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Checkpoint = <stem>.json manifest (name, shape, dtype, byte offset per
// tensor) + <stem>.bin, a flat little-endian float64 blob in store order.

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& manifest_path);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& manifest_path);
/// Copies tensors into the store by name. Every store parameter must be
/// present with a matching shape.
void load_checkpoint(ParameterStore& store, const std::filesystem::path& manifest_path);

}  // namespace dronefuse::nn
