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
#include <utility>
#include <vector>

#include "dronefuse/model.hpp"
#include "dronefuse/radar_dsp.hpp"
#include "dronefuse/synthgen.hpp"
#include "dronefuse/training.hpp"

namespace dronefuse {

struct AudioConfig {
  std::uint32_t sample_rate = 16000;
  std::size_t window = 16000;
  std::size_t hop = 8000;
};

struct SynthConfig {
  std::size_t n_per_class = 64;
  bool stereo = true;
  double radar_noise_std = 150.0;
  double bpf_jitter = 0.04;
  // Broadband-to-tonal power ratio range for drone clips.
  double drone_noise_min = 0.5;
  double drone_noise_max = 3.0;
  // AR(1) pole range of the background noise shared by every class.
  double ambient_colour_min = 0.8;
  double ambient_colour_max = 0.98;
};

/// Everything a CLI run can be configured with.
struct PipelineConfig {
  radar::RadarConfig radar;
  std::string radar_layout = "cint16_le_iq";
  bool filter_zero_doppler = true;
  bool hann_window = false;
  radar::CfarConfig cfar;
  AudioConfig audio;
  model::ModelConfig model;
  model::LossConfig loss;
  training::TrainConfig train;
  SynthConfig synth;
  std::vector<double> snr_list{6, 12, 18, 24};

  /// Model config with the input shapes and dropout filled in from the
  /// audio, radar and train sections.
  model::ModelConfig resolved_model() const;
  training::DataConfig data() const;
  synth::ClassLibrary library() const;
  synth::GenOptions gen_options() const;
  void validate() const;
};

/// Named starting points: "paper" (published settings) and "toy"
/// (desk-scale radar, short audio windows, narrow encoders).
PipelineConfig preset(const std::string& name);

/// Sets one key. Unknown keys and malformed values raise ConfigError.
void set_key(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_key(const PipelineConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

/// `key = value` lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& text, const std::string& origin);
void apply_kv_file(PipelineConfig& cfg, const std::filesystem::path& path);
/// Every key in schema order.
std::string to_kv(const PipelineConfig& cfg);

}  // namespace dronefuse
