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
#include "dronefuse/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "dronefuse/error.hpp"

namespace dronefuse::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Beat frequency reaching the sampling rate, one past the last range bin.
double unambiguous_range(const radar::RadarConfig& c) {
  return c.sampling_rate * radar::kSpeedOfLight / (2.0 * c.chirp_slope);
}

double max_velocity(const radar::RadarConfig& c) {
  return static_cast<double>(c.chirps_per_frame) / 2.0 * radar::velocity_resolution(c);
}

double beat_frequency(double range, const radar::RadarConfig& c) {
  return 2.0 * range * c.chirp_slope / radar::kSpeedOfLight;
}

}  // namespace

void DroneAcousticSpec::validate(double sample_rate) const {
  if (harmonic_count >= 1 && !(blade_pass_frequency > 50.0 && blade_pass_frequency < 2000.0)) {
    throw SpecError("acoustic spec: blade-pass frequency " + std::to_string(blade_pass_frequency) +
                    " Hz outside (50, 2000)");
  }
  if (harmonic_count >= 1 && blade_pass_frequency >= sample_rate / 2.0) {
    throw SpecError("acoustic spec: fundamental at or above Nyquist");
  }
  if (!(harmonic_decay > 0.0) || am_depth < 0.0 || am_depth > 1.0 || am_rate < 0.0 || noise_level < 0.0 ||
      noise_colour < 0.0 || noise_colour >= 1.0) {
    throw SpecError("acoustic spec: decay > 0, am_depth in [0,1], am_rate >= 0, noise_level >= 0, colour in [0,1)");
  }
  if (harmonic_count == 0 && noise_level <= 0.0) throw SpecError("acoustic spec: ambient scene needs noise");
}

void RadarSceneSpec::validate(const radar::RadarConfig& config) const {
  const double r_max = unambiguous_range(config);
  const double v_max = max_velocity(config);
  if (has_target) {
    if (!(range >= 0.0 && range < r_max)) {
      throw SpecError("radar spec: range " + std::to_string(range) + " m outside [0, " + std::to_string(r_max) + ")");
    }
    if (!(std::abs(velocity) < v_max)) {
      throw SpecError("radar spec: |velocity| " + std::to_string(velocity) + " m/s not below " + std::to_string(v_max));
    }
  }
  for (const auto& c : clutter) {
    if (!(c.range >= 0.0 && c.range < r_max)) throw SpecError("radar spec: clutter range outside the unambiguous range");
  }
  if (noise_std < 0.0 || amplitude < 0.0 || micro_doppler_amplitude < 0.0) {
    throw SpecError("radar spec: amplitudes and noise must be non-negative");
  }
}

std::pair<long, long> analytic_bins(const RadarSceneSpec& spec, const radar::RadarConfig& c) {
  const auto n = static_cast<double>(c.samples_per_chirp);
  const auto chirps = static_cast<long>(c.chirps_per_frame);
  const long range_bin = std::lround(beat_frequency(spec.range, c) * n / c.sampling_rate);
  const double fd = 2.0 * spec.velocity / c.carrier_wavelength();
  long doppler = chirps / 2 + std::lround(fd * static_cast<double>(chirps) * c.chirp_repetition_interval);
  doppler = ((doppler % chirps) + chirps) % chirps;
  return {doppler, range_bin};
}

ClassLibrary ClassLibrary::default_library() {
  ClassLibrary lib;
  ClassSpec none;
  none.name = kClassNames[0];
  none.drone = false;
  none.acoustic.harmonic_count = 0;
  none.noise_level = {1.0, 1.0};
  none.noise_colour = {0.8, 0.98};
  none.am_depth = {0.0, 0.6};
  none.am_rate = {0.5, 4.0};
  lib.classes.push_back(none);
  const double bpf[] = {110.0, 160.0, 220.0, 300.0};
  // Micro-Doppler bands overlap between neighbours.
  const Range md[] = {{0.20, 0.45}, {0.30, 0.55}, {0.40, 0.65}, {0.50, 0.75}};
  for (std::size_t i = 0; i < 4; ++i) {
    ClassSpec c;
    c.name = kClassNames[i + 1];
    c.acoustic.blade_pass_frequency = bpf[i];
    c.micro_doppler_offset = md[i];
    c.micro_doppler_amplitude = {0.15, 0.4};
    c.noise_colour = none.noise_colour;
    lib.classes.push_back(c);
  }
  return lib;
}

void ClassLibrary::validate() const {
  if (classes.size() != std::size(kClassNames)) throw SpecError("class library: exactly 5 classes expected");
  if (classes[0].drone) throw SpecError("class library: class 0 must be the non-drone class");
  for (std::size_t i = 1; i < classes.size(); ++i) {
    if (!classes[i].drone) throw SpecError("class library: classes 1-4 must be drones");
    for (std::size_t j = 1; j < i; ++j) {
      if (std::abs(classes[i].acoustic.blade_pass_frequency - classes[j].acoustic.blade_pass_frequency) < 20.0) {
        throw SpecError("class library: fundamentals of '" + classes[i].name + "' and '" + classes[j].name +
                        "' closer than 20 Hz");
      }
    }
    if (classes[i].min_harmonics < 1 || classes[i].min_harmonics > classes[i].max_harmonics) {
      throw SpecError("class library: harmonic range invalid for '" + classes[i].name + "'");
    }
  }
}

SampleScene draw_scene(const ClassLibrary& lib, std::size_t label, const radar::RadarConfig& config,
                       KeyedStream& rng) {
  if (label >= lib.classes.size()) throw IndexError("draw_scene: class label " + std::to_string(label));
  const ClassSpec& c = lib.classes[label];
  SampleScene s;
  s.acoustic = c.acoustic;
  if (c.drone) {
    s.acoustic.blade_pass_frequency *= 1.0 + rng.uniform(-c.bpf_jitter, c.bpf_jitter);
    s.acoustic.harmonic_count = c.min_harmonics + rng.below(c.max_harmonics - c.min_harmonics + 1);
  }
  s.acoustic.harmonic_decay = c.harmonic_decay.draw(rng);
  s.acoustic.am_rate = c.am_rate.draw(rng);
  s.acoustic.am_depth = c.am_depth.draw(rng);
  s.acoustic.noise_level = c.noise_level.draw(rng);
  s.acoustic.noise_colour = c.noise_colour.draw(rng);

  const double r_max = unambiguous_range(config);
  s.radar.has_target = c.drone;
  s.radar.range = c.range_fraction.draw(rng) * r_max;
  const double speed = c.speed_fraction.draw(rng) * max_velocity(config);
  s.radar.velocity = rng.below(2) ? speed : -speed;
  s.radar.amplitude = c.amplitude.draw(rng);
  const double nyquist = 0.5 / config.chirp_repetition_interval;
  s.radar.micro_doppler_offset = c.micro_doppler_offset.draw(rng) * nyquist;
  s.radar.micro_doppler_amplitude = c.micro_doppler_amplitude.draw(rng);
  for (std::size_t k = 0; k < lib.clutter_components; ++k) {
    s.radar.clutter.push_back({rng.uniform(0.05, 0.95) * r_max, lib.clutter_amplitude.draw(rng)});
  }
  s.radar.noise_std = lib.radar_noise_std;
  return s;
}

acoustic::AudioClip synth_acoustic(const DroneAcousticSpec& spec, double duration, std::uint32_t rate,
                                   std::uint64_t seed) {
  if (!(duration > 0.0) || rate == 0) throw SpecError("synth_acoustic: duration and rate must be positive");
  spec.validate(rate);
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  KeyedStream rng(seed);
  std::vector<double> x(n, 0.0);
  double tonal_power = 0.0;
  double amp = 1.0;
  for (std::size_t h = 1; h <= spec.harmonic_count; ++h, amp *= spec.harmonic_decay) {
    const double f = static_cast<double>(h) * spec.blade_pass_frequency;
    const double phase = kTwoPi * rng.uniform();
    if (f >= rate / 2.0) continue;
    tonal_power += 0.5 * amp * amp;
    for (std::size_t i = 0; i < n; ++i) x[i] += amp * std::sin(kTwoPi * f * static_cast<double>(i) / rate + phase);
  }
  const double am_phase = kTwoPi * rng.uniform();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] *= 1.0 + spec.am_depth * std::sin(kTwoPi * spec.am_rate * static_cast<double>(i) / rate + am_phase);
  }
  if (spec.noise_level > 0.0) {
    const double target = spec.noise_level * (spec.harmonic_count ? tonal_power : 1.0);
    // AR(1) innovations scaled to the requested stationary power.
    const double a = spec.noise_colour;
    const double sigma = std::sqrt(target * (1.0 - a * a));
    double state = rng.normal() * std::sqrt(target);
    for (std::size_t i = 0; i < n; ++i) {
      state = a * state + sigma * rng.normal();
      double env = 1.0;
      if (spec.harmonic_count == 0) {
        env += spec.am_depth * std::sin(kTwoPi * spec.am_rate * static_cast<double>(i) / rate + am_phase);
      }
      x[i] += env * state;
    }
  }
  acoustic::normalize_inplace(x);
  acoustic::AudioClip clip;
  clip.sample_rate = rate;
  clip.channels.push_back(std::move(x));
  return clip;
}

radar::ComplexMatrix synth_radar_frame(const RadarSceneSpec& spec, const radar::RadarConfig& config,
                                       std::uint64_t seed) {
  config.validate();
  spec.validate(config);
  const std::size_t chirps = config.chirps_per_frame, samples = config.samples_per_chirp;
  radar::ComplexMatrix m(chirps, samples);
  const double fs = config.sampling_rate, tr = config.chirp_repetition_interval;
  auto tone = [&](double amp, double fb, double fd, double phase) {
    for (std::size_t n = 0; n < chirps; ++n) {
      for (std::size_t k = 0; k < samples; ++k) {
        const double arg = kTwoPi * (fb * static_cast<double>(k) / fs + fd * static_cast<double>(n) * tr) + phase;
        m(n, k) += std::polar(amp, arg);
      }
    }
  };
  KeyedStream rng(seed);
  if (spec.has_target) {
    const double fb = beat_frequency(spec.range, config);
    const double fd = 2.0 * spec.velocity / config.carrier_wavelength();
    tone(spec.amplitude, fb, fd, kTwoPi * rng.uniform());
    if (spec.micro_doppler_offset > 0.0 && spec.micro_doppler_amplitude > 0.0) {
      const double a = spec.amplitude * spec.micro_doppler_amplitude;
      tone(a, fb, fd + spec.micro_doppler_offset, kTwoPi * rng.uniform());
      tone(a, fb, fd - spec.micro_doppler_offset, kTwoPi * rng.uniform());
    }
  }
  for (const auto& c : spec.clutter) tone(c.amplitude, beat_frequency(c.range, config), 0.0, kTwoPi * rng.uniform());
  if (spec.noise_std > 0.0) {
    const double s = spec.noise_std / std::numbers::sqrt2;
    for (auto& v : m.data) v += radar::Complex(s * rng.normal(), s * rng.normal());
  }
  return m;
}

DatasetManifest gen_dataset(const ClassLibrary& library, std::size_t n_per_class, const std::filesystem::path& out_dir,
                            std::uint64_t seed, const GenOptions& options) {
  if (n_per_class == 0) throw ConfigError("gen_dataset: n_per_class must be >= 1");
  library.validate();
  options.radar.validate();
  const auto layout = radar::SampleLayout::from_tag(options.radar_layout);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  std::filesystem::create_directories(out_dir / "radar", ec);
  if (ec) throw IoError("cannot create dataset directory '" + out_dir.string() + "': " + ec.message());

  const std::size_t n_classes = library.classes.size();
  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.records.resize(n_classes * n_per_class);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      auto& r = manifest.records[c * n_per_class + i];
      char id[96];
      std::snprintf(id, sizeof id, "%s_%05zu", library.classes[c].name.c_str(), i);
      r.id = id;
      r.acoustic_path = "audio/" + r.id + ".wav";
      r.radar_path = "radar/" + r.id + ".bin";
      r.class_label = c;
      r.detection_label = c == 0 ? 0 : 1;
      r.provenance = "synthetic";
      r.class_name = library.classes[c].name;
      r.radar_layout = layout.tag();
    }
  }

  const double duration = static_cast<double>(options.clip_samples) / options.sample_rate;
  const auto total = static_cast<std::ptrdiff_t>(manifest.records.size());
  std::string first_error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const auto& r = manifest.records[static_cast<std::size_t>(idx)];
    try {
      KeyedStream rng{seed, hash_string(r.id), 0};
      const SampleScene scene = draw_scene(library, r.class_label, options.radar, rng);
      acoustic::AudioClip clip = synth_acoustic(scene.acoustic, duration, options.sample_rate,
                                                hash_key({seed, hash_string(r.id), 1}));
      if (options.stereo) {
        const double gl = rng.uniform(0.6, 0.95), gr = rng.uniform(0.6, 0.95);
        const auto mono = clip.channels[0];
        clip.channels.assign(2, mono);
        for (std::size_t i = 0; i < mono.size(); ++i) {
          clip.channels[0][i] = gl * mono[i];
          clip.channels[1][i] = gr * mono[i];
        }
      }
      acoustic::write_wav(out_dir / r.acoustic_path, clip);
      radar::RadarCube cube(options.radar);
      for (std::size_t f = 0; f < options.radar.frames_per_capture; ++f) {
        cube.set_frame(f, synth_radar_frame(scene.radar, options.radar, hash_key({seed, hash_string(r.id), 2, f})));
      }
      radar::write_radar_capture(out_dir / r.radar_path, cube, layout);
    } catch (const std::exception& e) {
#pragma omp critical(gen_dataset_error)
      if (first_error.empty()) first_error = r.id + ": " + e.what();
    }
  }
  if (!first_error.empty()) throw IoError("gen_dataset: " + first_error);
  save_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace dronefuse::synth
