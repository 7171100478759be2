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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dronefuse/acoustic.hpp"
#include "dronefuse/manifest.hpp"
#include "dronefuse/radar_dsp.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::synth {

/// Tonal rotor signature. harmonic_count = 0 describes an ambient scene
/// (background only).
struct DroneAcousticSpec {
  double blade_pass_frequency = 110.0;  // Hz
  std::size_t harmonic_count = 4;
  double harmonic_decay = 0.6;   // amplitude ratio between successive harmonics
  double am_rate = 6.0;          // Hz
  double am_depth = 0.3;
  double noise_level = 0.05;     // background power relative to the tonal power
  double noise_colour = 0.0;     // first-order low-pass pole in [0, 1)
  /// Throws SpecError.
  void validate(double sample_rate) const;
};

struct ClutterComponent {
  double range = 0.0;      // m
  double amplitude = 0.0;  // linear ADC units
};

struct RadarSceneSpec {
  bool has_target = true;
  double range = 10.0;     // m
  double velocity = 0.0;   // m/s, positive = approaching
  double amplitude = 4000.0;
  double micro_doppler_offset = 0.0;  // Hz, 0 disables the sidebands
  double micro_doppler_amplitude = 0.0;  // relative to the target
  std::vector<ClutterComponent> clutter;
  double noise_std = 0.0;  // sqrt(E|n|^2)
  void validate(const radar::RadarConfig& config) const;
};

/// Nominal (doppler_bin, range_bin) of the target.
std::pair<long, long> analytic_bins(const RadarSceneSpec& spec, const radar::RadarConfig& config);

struct Range {
  double lo = 0.0, hi = 0.0;
  double draw(KeyedStream& rng) const { return rng.uniform(lo, hi); }
};

struct ClassSpec {
  std::string name;
  bool drone = true;
  DroneAcousticSpec acoustic;
  // Jitter applied per sample.
  double bpf_jitter = 0.04;  // relative
  Range harmonic_decay{0.45, 0.75};
  Range am_rate{2.0, 12.0};
  Range am_depth{0.1, 0.5};
  Range noise_level{0.5, 3.0};  // broadband power relative to tonal power
  Range noise_colour{0.0, 0.9};
  std::size_t min_harmonics = 3, max_harmonics = 6;
  // Radar signature as fractions of the unambiguous range / velocity.
  Range range_fraction{0.15, 0.85};
  Range speed_fraction{0.05, 0.7};  // radial speed, sign drawn separately
  Range amplitude{2500.0, 6000.0};
  Range micro_doppler_offset{0.0, 0.0};  // fraction of the slow-time Nyquist
  Range micro_doppler_amplitude{0.0, 0.0};
};

struct ClassLibrary {
  std::vector<ClassSpec> classes;  // index = class label, 0 = non-drone
  std::size_t clutter_components = 2;
  Range clutter_amplitude{1000.0, 4000.0};
  double radar_noise_std = 150.0;

  /// Four drone classes on blade-pass fundamentals 110, 160, 220, 300 Hz
  /// and a non-drone ambient class.
  static ClassLibrary default_library();
  void validate() const;
};

struct SampleScene {
  DroneAcousticSpec acoustic;
  RadarSceneSpec radar;
};

SampleScene draw_scene(const ClassLibrary& library, std::size_t class_label, const radar::RadarConfig& config,
                       KeyedStream& rng);

/// Mono clip, peak-normalized.
acoustic::AudioClip synth_acoustic(const DroneAcousticSpec& spec, double duration, std::uint32_t rate,
                                   std::uint64_t seed);
radar::ComplexMatrix synth_radar_frame(const RadarSceneSpec& spec, const radar::RadarConfig& config,
                                       std::uint64_t seed);

struct GenOptions {
  radar::RadarConfig radar;
  std::string radar_layout = "cint16_le_iq";
  std::uint32_t sample_rate = 16000;
  std::size_t clip_samples = 16000;
  bool stereo = true;
};

/// Writes <out>/audio/<id>.wav and <out>/radar/<id>.bin per sample plus
/// <out>/manifest.jsonl. Identical seeds give byte-identical files
/// regardless of thread count.
DatasetManifest gen_dataset(const ClassLibrary& library, std::size_t n_per_class, const std::filesystem::path& out_dir,
                            std::uint64_t seed, const GenOptions& options = {});

}  // namespace dronefuse::synth
