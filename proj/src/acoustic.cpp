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
#include "dronefuse/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "dronefuse/error.hpp"
#include "dronefuse/rng.hpp"

namespace dronefuse::acoustic {
namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip load_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("wav: file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) throw ParseError("wav: missing 'RIFF' tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) throw ParseError("wav: missing 'WAVE' form type");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + 16 > bytes.size()) throw ParseError("wav: fmt chunk too short");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 40 && body + 26 <= bytes.size()) {
        format = le16(bytes.data() + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw ParseError("wav: data chunk before fmt chunk");
      if (format != kFormatPcm) {
        throw ParseError("wav: unsupported encoding: audio_format=" + std::to_string(format) +
                         " (PCM required)");
      }
      if (bits != 16) {
        throw ParseError("wav: unsupported encoding: bits_per_sample=" + std::to_string(bits) +
                         " (16 required)");
      }
      if (channels < 1 || channels > 2) {
        throw ParseError("wav: unsupported channel count num_channels=" + std::to_string(channels));
      }
      if (rate == 0) throw ParseError("wav: sample_rate is zero");
      if (body + size > bytes.size()) {
        throw ParseError("wav: data chunk truncated: declares " + std::to_string(size) +
                         " bytes, " + std::to_string(bytes.size() - body) + " present");
      }
      const std::size_t frame_bytes = 2u * channels;
      if (size % frame_bytes != 0) {
        throw ParseError("wav: data chunk size " + std::to_string(size) +
                         " is not a multiple of block_align " + std::to_string(frame_bytes));
      }
      const std::size_t frames = size / frame_bytes;
      AudioClip clip;
      clip.sample_rate = rate;
      clip.channels.assign(channels, std::vector<double>(frames));
      const std::uint8_t* p = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          const auto code = static_cast<std::int16_t>(le16(p));
          clip.channels[c][i] = static_cast<double>(code) / 32768.0;
          p += 2;
        }
      }
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  throw ParseError(have_fmt ? "wav: no data chunk" : "wav: no fmt chunk");
}

AudioClip read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return load_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  if (clip.channels.empty()) throw DimensionError("encode_wav: clip has no channels");
  const auto ch = static_cast<std::uint16_t>(clip.channel_count());
  const std::size_t frames = clip.length();
  const auto data_bytes = static_cast<std::uint32_t>(frames * ch * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, ch);
  put32(out, clip.sample_rate);
  put32(out, clip.sample_rate * ch * 2u);
  put16(out, static_cast<std::uint16_t>(ch * 2));
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_bytes);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double v = std::nearbyint(clip.channels[c][i] * 32768.0);
      const auto code = static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
      put16(out, static_cast<std::uint16_t>(code));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AudioClip to_mono(const AudioClip& clip) {
  if (clip.channels.empty()) throw DimensionError("to_mono: clip has no channels");
  if (clip.channel_count() == 1) return clip;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.channels.assign(1, std::vector<double>(clip.length(), 0.0));
  const double inv = 1.0 / static_cast<double>(clip.channel_count());
  for (std::size_t i = 0; i < clip.length(); ++i) {
    double s = 0.0;
    for (const auto& ch : clip.channels) s += ch[i];
    out.channels[0][i] = s * inv;
  }
  return out;
}

void normalize_inplace(std::span<double> samples) {
  double peak = 0.0;
  for (double v : samples) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return;
  for (double& v : samples) v /= peak;
}

AudioClip normalize(const AudioClip& clip) {
  if (clip.length() == 0) throw DimensionError("normalize: empty clip");
  double peak = 0.0;
  for (const auto& ch : clip.channels)
    for (double v : ch) peak = std::max(peak, std::abs(v));
  AudioClip out = clip;
  if (peak == 0.0) return out;
  for (auto& ch : out.channels)
    for (double& v : ch) v /= peak;
  return out;
}

std::vector<AudioSegment> segment(const AudioClip& clip, std::size_t window, std::size_t hop,
                                  const std::string& source_id) {
  if (window < 1 || hop < 1) throw ConfigError("segment: window and hop must be >= 1");
  if (clip.channel_count() != 1) throw DimensionError("segment: clip must be mono");
  std::vector<AudioSegment> out;
  const auto& x = clip.channels.front();
  for (std::size_t off = 0; off + window <= x.size(); off += hop) {
    const auto first = x.begin() + static_cast<std::ptrdiff_t>(off);
    out.push_back({std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window)),
                   source_id, off});
  }
  return out;
}

double signal_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

std::vector<double> add_noise_at_snr(std::span<const double> x, double snr_db, std::uint64_t seed) {
  const double p = signal_power(x);
  if (!(p > 0.0)) throw DomainError("add_noise_at_snr: input has zero power, SNR undefined");
  const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
  KeyedStream rng(seed);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v += sigma * rng.normal();
  return out;
}

double measure_snr(std::span<const double> signal, std::span<const double> noisy) {
  if (signal.size() != noisy.size()) {
    throw DimensionError("measure_snr: lengths differ (" + std::to_string(signal.size()) + " vs " +
                         std::to_string(noisy.size()) + ")");
  }
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double d = noisy[i] - signal[i];
    ps += signal[i] * signal[i];
    pn += d * d;
  }
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

void write_segment_f32(const std::filesystem::path& path, std::span<const double> samples) {
  std::vector<std::uint8_t> bytes(samples.size() * 4);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float f = static_cast<float>(samples[i]);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> read_segment_f32(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() % 4 != 0) {
    throw ParseError(path.string() + ": float32 segment size " + std::to_string(bytes.size()) +
                     " is not a multiple of 4");
  }
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t u = le32(bytes.data() + 4 * i);
    float f;
    std::memcpy(&f, &u, 4);
    out[i] = f;
  }
  return out;
}

}  // namespace dronefuse::acoustic
