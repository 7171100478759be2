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
#include "dronefuse/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dronefuse/error.hpp"

namespace dronefuse {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double d) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(x);
    } else {
      s += std::to_string(x);
    }
  }
  return s;
}

struct Entry {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define DF_DOUBLE(KEY, FIELD)                                                                                \
  Entry {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& v) { c.FIELD = to_double(KEY, v); },                       \
        [](const PipelineConfig& c) { return fmt(c.FIELD); }                                                 \
  }
#define DF_SIZE(KEY, FIELD)                                                                                  \
  Entry {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& v) { c.FIELD = static_cast<decltype(c.FIELD)>(to_size(KEY, v)); }, \
        [](const PipelineConfig& c) { return std::to_string(c.FIELD); }                                      \
  }
#define DF_BOOL(KEY, FIELD)                                                                                  \
  Entry {                                                                                                    \
    KEY, [](PipelineConfig& c, const std::string& v) { c.FIELD = to_bool(KEY, v); },                         \
        [](const PipelineConfig& c) { return std::string(c.FIELD ? "true" : "false"); }                      \
  }
#define DF_SIZES(KEY, FIELD)                                                                                 \
  Entry {                                                                                                    \
    KEY,                                                                                                     \
        [](PipelineConfig& c, const std::string& v) {                                                        \
          c.FIELD.clear();                                                                                   \
          for (const auto& s : split_list(v)) c.FIELD.push_back(to_size(KEY, s));                            \
        },                                                                                                   \
        [](const PipelineConfig& c) { return join(c.FIELD); }                                                \
  }

const std::vector<Entry>& schema() {
  static const std::vector<Entry> entries = {
      DF_DOUBLE("radar.start_frequency", radar.start_frequency),
      DF_SIZE("radar.samples_per_chirp", radar.samples_per_chirp),
      DF_SIZE("radar.chirps_per_frame", radar.chirps_per_frame),
      DF_SIZE("radar.frames_per_capture", radar.frames_per_capture),
      DF_DOUBLE("radar.sampling_rate", radar.sampling_rate),
      DF_DOUBLE("radar.chirp_slope", radar.chirp_slope),
      DF_DOUBLE("radar.bandwidth", radar.bandwidth),
      DF_DOUBLE("radar.chirp_repetition_interval", radar.chirp_repetition_interval),
      DF_DOUBLE("radar.frame_period", radar.frame_period),
      Entry{"radar.layout",
            [](PipelineConfig& c, const std::string& v) {
              radar::SampleLayout::from_tag(v);
              c.radar_layout = v;
            },
            [](const PipelineConfig& c) { return c.radar_layout; }},
      DF_BOOL("radar.filter_zero_doppler", filter_zero_doppler),
      DF_BOOL("radar.hann_window", hann_window),
      DF_SIZE("cfar.guard_cells", cfar.guard_cells),
      DF_SIZE("cfar.training_cells", cfar.training_cells),
      DF_DOUBLE("cfar.pfa", cfar.probability_of_false_alarm),
      DF_SIZE("audio.sample_rate", audio.sample_rate),
      DF_SIZE("audio.window", audio.window),
      DF_SIZE("audio.hop", audio.hop),
      DF_SIZE("model.acoustic.small_kernel", model.acoustic.small_kernel),
      DF_SIZE("model.acoustic.large_kernel", model.acoustic.large_kernel),
      DF_SIZE("model.acoustic.downsample_kernel", model.acoustic.downsample_kernel),
      DF_SIZE("model.acoustic.downsample_stride", model.acoustic.downsample_stride),
      DF_SIZE("model.acoustic.num_se_blocks", model.acoustic.num_se_blocks),
      DF_SIZES("model.acoustic.widths", model.acoustic.widths),
      DF_SIZE("model.rd.stem_kernel", model.range_doppler.stem_kernel),
      DF_SIZES("model.rd.kernels", model.range_doppler.kernels),
      DF_SIZES("model.rd.widths", model.range_doppler.widths),
      Entry{"model.embed_dim",
            [](PipelineConfig& c, const std::string& v) {
              const auto d = to_size("model.embed_dim", v);
              c.model.fusion.embed_dim = c.model.acoustic.embed_dim = c.model.range_doppler.embed_dim = d;
            },
            [](const PipelineConfig& c) { return std::to_string(c.model.fusion.embed_dim); }},
      DF_SIZE("model.n_heads", model.fusion.n_heads),
      DF_SIZE("model.n_layers", model.fusion.n_layers),
      DF_SIZE("model.ffn_hidden", model.fusion.ffn_hidden),
      DF_SIZE("model.se_reduction", model.se_reduction),
      DF_SIZE("model.head_hidden", model.head_hidden),
      Entry{"model.modalities",
            [](PipelineConfig& c, const std::string& v) {
              c.model.modalities.clear();
              for (const auto& s : split_list(v)) {
                if (s == "acoustic") {
                  c.model.modalities.push_back(model::Modality::Acoustic);
                } else if (s == "range_doppler") {
                  c.model.modalities.push_back(model::Modality::RangeDoppler);
                } else {
                  throw ConfigError("config: unknown modality '" + s + "' (acoustic, range_doppler)");
                }
              }
            },
            [](const PipelineConfig& c) {
              std::string s;
              for (auto m : c.model.modalities) s += (s.empty() ? "" : ",") + std::string(model::modality_name(m));
              return s;
            }},
      DF_DOUBLE("loss.lambda", loss.lambda),
      DF_SIZE("train.epochs", train.epochs),
      DF_SIZE("train.batch_size", train.batch_size),
      DF_DOUBLE("train.learning_rate", train.learning_rate),
      DF_DOUBLE("train.weight_decay", train.weight_decay),
      DF_DOUBLE("train.dropout", train.dropout),
      DF_DOUBLE("train.beta1", train.beta1),
      DF_DOUBLE("train.beta2", train.beta2),
      DF_DOUBLE("train.epsilon", train.epsilon),
      DF_SIZE("train.patience", train.patience),
      DF_DOUBLE("train.test_fraction", train.test_fraction),
      DF_DOUBLE("train.validation_fraction", train.validation_fraction),
      DF_SIZE("train.gradient_slots", train.gradient_slots),
      DF_SIZE("seed", train.seed),
      DF_SIZE("synth.n_per_class", synth.n_per_class),
      DF_BOOL("synth.stereo", synth.stereo),
      DF_DOUBLE("synth.radar_noise_std", synth.radar_noise_std),
      DF_DOUBLE("synth.bpf_jitter", synth.bpf_jitter),
      DF_DOUBLE("synth.drone_noise_min", synth.drone_noise_min),
      DF_DOUBLE("synth.drone_noise_max", synth.drone_noise_max),
      DF_DOUBLE("synth.ambient_colour_min", synth.ambient_colour_min),
      DF_DOUBLE("synth.ambient_colour_max", synth.ambient_colour_max),
      Entry{"eval.snr_list",
            [](PipelineConfig& c, const std::string& v) {
              c.snr_list.clear();
              for (const auto& s : split_list(v)) c.snr_list.push_back(to_double("eval.snr_list", s));
            },
            [](const PipelineConfig& c) { return join(c.snr_list); }},
  };
  return entries;
}

#undef DF_DOUBLE
#undef DF_SIZE
#undef DF_BOOL
#undef DF_SIZES

const Entry& find_entry(const std::string& key) {
  for (const auto& e : schema()) {
    if (e.key == key) return e;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

}  // namespace

model::ModelConfig PipelineConfig::resolved_model() const {
  auto m = model;
  m.acoustic_length = audio.window;
  m.rd_height = radar.chirps_per_frame;
  m.rd_width = radar.samples_per_chirp;
  m.dropout = train.dropout;
  return m;
}

training::DataConfig PipelineConfig::data() const {
  return {radar, filter_zero_doppler, hann_window, audio.sample_rate, audio.window};
}

synth::ClassLibrary PipelineConfig::library() const {
  auto lib = synth::ClassLibrary::default_library();
  lib.radar_noise_std = synth.radar_noise_std;
  for (auto& c : lib.classes) {
    c.bpf_jitter = synth.bpf_jitter;
    c.noise_colour = {synth.ambient_colour_min, synth.ambient_colour_max};
    if (c.drone) c.noise_level = {synth.drone_noise_min, synth.drone_noise_max};
  }
  return lib;
}

synth::GenOptions PipelineConfig::gen_options() const {
  return {radar, radar_layout, audio.sample_rate, audio.window, synth.stereo};
}

void PipelineConfig::validate() const {
  radar.validate();
  radar::SampleLayout::from_tag(radar_layout);
  if (audio.window == 0 || audio.hop == 0 || audio.sample_rate == 0) {
    throw ConfigError("config: audio.window, audio.hop and audio.sample_rate must be >= 1");
  }
  loss.validate();
  train.validate();
  resolved_model().validate();
  if (cfar.window() > radar.chirps_per_frame || cfar.window() > radar.samples_per_chirp) {
    throw ConfigError("config: CFAR window " + std::to_string(cfar.window()) + " does not fit the map");
  }
  cfar.validate();
  if (!(synth.drone_noise_min >= 0.0) || !(synth.drone_noise_max >= synth.drone_noise_min)) {
    throw ConfigError("config: synth.drone_noise_min/max must satisfy 0 <= min <= max");
  }
  if (!(synth.ambient_colour_min >= 0.0) || !(synth.ambient_colour_max >= synth.ambient_colour_min) ||
      !(synth.ambient_colour_max < 1.0)) {
    throw ConfigError("config: synth.ambient_colour_min/max must satisfy 0 <= min <= max < 1");
  }
}

PipelineConfig preset(const std::string& name) {
  PipelineConfig c;
  if (name == "paper") return c;
  if (name != "toy") throw ConfigError("unknown preset '" + name + "' (paper, toy)");
  for (const auto& [k, v] : parse_kv(R"(
radar.samples_per_chirp = 32
radar.chirps_per_frame = 16
radar.frames_per_capture = 1
radar.bandwidth = 95.936e6
cfar.guard_cells = 1
cfar.training_cells = 2
audio.window = 1024
audio.hop = 1024
model.acoustic.widths = 8,8,8,8,8
model.rd.widths = 4,4,4,4
model.embed_dim = 32
model.ffn_hidden = 64
model.head_hidden = 32
train.epochs = 30
train.batch_size = 32
train.learning_rate = 3e-4
train.weight_decay = 0.01
train.dropout = 0.1
train.patience = 6
synth.n_per_class = 256
)",
                                     "preset:toy")) {
    set_key(c, k, v);
  }
  return c;
}

void set_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(key).set(cfg, trim(value));
}

std::string get_key(const PipelineConfig& cfg, const std::string& key) { return find_entry(key).get(cfg); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& e : schema()) keys.push_back(e.key);
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(ss, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(origin + ":" + std::to_string(n) + ": empty key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_kv_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_kv(ss.str(), path.string())) set_key(cfg, k, v);
}

std::string to_kv(const PipelineConfig& cfg) {
  std::string s;
  for (const auto& e : schema()) s += e.key + " = " + e.get(cfg) + "\n";
  return s;
}

}  // namespace dronefuse
