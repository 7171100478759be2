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
#include <string>
#include <vector>

#include "dronefuse/nn/gradcheck.hpp"

namespace dronefuse {

struct LayerCheck {
  std::string name;
  nn::GradCheckResult result;
  double tolerance = 0.0;
  bool passed() const { return result.max_relative_error < tolerance; }
};

inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

/// Central-difference checks of every graph primitive (tolerance 1e-4)
/// followed by a small fused model under the joint loss with sampled
/// parameter coordinates (tolerance 1e-3).
std::vector<LayerCheck> run_gradcheck_suite(std::uint64_t seed = 0);

/// The composed model check alone.
LayerCheck end_to_end_gradcheck(std::uint64_t seed = 0, std::size_t coords_per_tensor = 4);

}  // namespace dronefuse
