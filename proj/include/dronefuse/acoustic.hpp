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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dronefuse::acoustic {

struct AudioClip {
  std::uint32_t sample_rate = 16000;
  std::vector<std::vector<double>> channels;

  std::size_t channel_count() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
};

struct AudioSegment {
  std::vector<double> samples;
  std::string source_id;
  std::size_t offset = 0;
};

/// RIFF/WAVE, PCM16, any channel count >= 1. Codes map to [-1, 1) by
/// division by 32768. Errors name the offending field.
AudioClip load_wav(std::span<const std::uint8_t> bytes);
AudioClip read_wav(const std::filesystem::path& path);

/// PCM16 encoding of a clip; samples are scaled by 32768, rounded and
/// saturated.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

AudioClip to_mono(const AudioClip& clip);

/// Peak normalization per channel set: every sample is divided by the
/// global max |x|. All-zero clips come back unchanged.
AudioClip normalize(const AudioClip& clip);
void normalize_inplace(std::span<double> samples);

/// Windows at offsets 0, hop, 2*hop, ... while offset + window <= length.
/// Requires a mono clip; a window longer than the clip yields no segments.
std::vector<AudioSegment> segment(const AudioClip& clip, std::size_t window, std::size_t hop,
                                  const std::string& source_id = {});

double signal_power(std::span<const double> x);

/// x + n, n ~ N(0, power(x) / 10^(snr_db/10)). The Gaussian draws depend
/// only on seed, so one seed gives the same noise direction at every SNR.
std::vector<double> add_noise_at_snr(std::span<const double> x, double snr_db, std::uint64_t seed);

/// 10 log10(power(signal) / power(noisy - signal)). Identical inputs return
/// +infinity.
double measure_snr(std::span<const double> signal, std::span<const double> noisy);

/// Raw little-endian float32 segment files.
void write_segment_f32(const std::filesystem::path& path, std::span<const double> samples);
std::vector<double> read_segment_f32(const std::filesystem::path& path);

}  // namespace dronefuse::acoustic
