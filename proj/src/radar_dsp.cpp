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
#include "dronefuse/radar_dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

#include "dronefuse/error.hpp"
#include "dronefuse/fft.hpp"

namespace dronefuse::radar {

void RadarConfig::validate() const {
  if (!(start_frequency > 0 && sampling_rate > 0 && chirp_slope > 0 && bandwidth > 0 &&
        chirp_repetition_interval > 0 && frame_period > 0)) {
    throw ConfigError("radar config: all physical parameters must be strictly positive");
  }
  if (samples_per_chirp == 0 || chirps_per_frame == 0 || frames_per_capture == 0) {
    throw ConfigError("radar config: sample, chirp and frame counts must be >= 1");
  }
  const double swept = chirp_slope * (static_cast<double>(samples_per_chirp) / sampling_rate);
  if (std::abs(swept - bandwidth) > 0.02 * bandwidth) {
    throw ConfigError("radar config: slope * sampling time (" + std::to_string(swept) +
                      " Hz) differs from bandwidth (" + std::to_string(bandwidth) +
                      " Hz) by more than 2%");
  }
  if (static_cast<double>(chirps_per_frame) * chirp_repetition_interval > frame_period) {
    throw ConfigError("radar config: chirps_per_frame * chirp_repetition_interval exceeds frame_period");
  }
}

double range_resolution(const RadarConfig& config) {
  if (!(config.bandwidth > 0)) throw ConfigError("range_resolution: bandwidth must be > 0");
  return kSpeedOfLight / (2.0 * config.bandwidth);
}

double velocity_resolution(const RadarConfig& config) {
  if (!(config.chirp_repetition_interval > 0)) {
    throw ConfigError("velocity_resolution: chirp_repetition_interval must be > 0");
  }
  return config.carrier_wavelength() /
         (2.0 * static_cast<double>(config.chirps_per_frame) * config.chirp_repetition_interval);
}

SampleLayout SampleLayout::from_tag(const std::string& tag) {
  SampleLayout l;
  if (tag == "cint16_le_iq") return l;
  if (tag == "cint16_le_qi") {
    l.order = Order::QI;
  } else if (tag == "cint16_be_iq") {
    l.endian = Endian::Big;
  } else if (tag == "cint16_be_qi") {
    l.endian = Endian::Big;
    l.order = Order::QI;
  } else if (tag == "rint16_le") {
    l.format = Format::RealInt16;
  } else if (tag == "rint16_be") {
    l.format = Format::RealInt16;
    l.endian = Endian::Big;
  } else {
    throw ConfigError("unknown radar sample layout tag '" + tag + "'");
  }
  return l;
}

std::string SampleLayout::tag() const {
  std::string t = format == Format::ComplexInt16 ? "cint16_" : "rint16_";
  t += endian == Endian::Little ? "le" : "be";
  if (format == Format::ComplexInt16) t += order == Order::IQ ? "_iq" : "_qi";
  return t;
}

RadarCube::RadarCube(RadarConfig config)
    : config_(config),
      data_(config.frames_per_capture * config.chirps_per_frame * config.samples_per_chirp) {}

ComplexMatrix RadarCube::frame(std::size_t f) const {
  if (f >= frames()) {
    throw IndexError("frame index " + std::to_string(f) + " out of range (" +
                     std::to_string(frames()) + " frames)");
  }
  ComplexMatrix m(chirps(), samples());
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(f * chirps() * samples());
  std::copy(first, first + static_cast<std::ptrdiff_t>(m.data.size()), m.data.begin());
  return m;
}

void RadarCube::set_frame(std::size_t f, const ComplexMatrix& m) {
  if (f >= frames() || m.rows != chirps() || m.cols != samples()) {
    throw DimensionError("set_frame: frame index or matrix shape mismatch");
  }
  std::copy(m.data.begin(), m.data.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(f * chirps() * samples()));
}

namespace {

std::int16_t read_i16(const std::uint8_t* p, SampleLayout::Endian e) {
  const std::uint16_t u = e == SampleLayout::Endian::Little
                              ? static_cast<std::uint16_t>(p[0] | (p[1] << 8))
                              : static_cast<std::uint16_t>(p[1] | (p[0] << 8));
  return static_cast<std::int16_t>(u);
}

void write_i16(std::uint8_t* p, std::int16_t v, SampleLayout::Endian e) {
  const auto u = static_cast<std::uint16_t>(v);
  const auto lo = static_cast<std::uint8_t>(u & 0xff);
  const auto hi = static_cast<std::uint8_t>(u >> 8);
  if (e == SampleLayout::Endian::Little) {
    p[0] = lo;
    p[1] = hi;
  } else {
    p[0] = hi;
    p[1] = lo;
  }
}

std::int16_t quantize(double v) {
  const double r = std::nearbyint(v);
  return static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
}

}  // namespace

RadarCube parse_radar_capture(std::span<const std::uint8_t> bytes, const RadarConfig& config,
                              const SampleLayout& layout) {
  RadarCube cube(config);
  const std::size_t n = cube.raw().size();
  const std::size_t expected = n * layout.bytes_per_sample();
  if (bytes.size() != expected) {
    throw SizeError("radar capture size mismatch: expected " + std::to_string(expected) +
                    " bytes (" + std::to_string(config.frames_per_capture) + " frames x " +
                    std::to_string(config.chirps_per_frame) + " chirps x " +
                    std::to_string(config.samples_per_chirp) + " samples, layout " +
                    layout.tag() + "), got " + std::to_string(bytes.size()));
  }
  const std::uint8_t* p = bytes.data();
  for (std::size_t f = 0; f < cube.frames(); ++f) {
    for (std::size_t c = 0; c < cube.chirps(); ++c) {
      for (std::size_t s = 0; s < cube.samples(); ++s) {
        if (layout.format == SampleLayout::Format::RealInt16) {
          cube.at(f, c, s) = Complex(read_i16(p, layout.endian), 0.0);
          p += 2;
        } else {
          const double a = read_i16(p, layout.endian);
          const double b = read_i16(p + 2, layout.endian);
          cube.at(f, c, s) = layout.order == SampleLayout::Order::IQ ? Complex(a, b) : Complex(b, a);
          p += 4;
        }
      }
    }
  }
  return cube;
}

std::vector<std::uint8_t> serialize_radar_capture(const RadarCube& cube,
                                                  const SampleLayout& layout) {
  const auto raw = cube.raw();
  std::vector<std::uint8_t> out(raw.size() * layout.bytes_per_sample());
  std::uint8_t* p = out.data();
  for (const Complex& z : raw) {
    if (layout.format == SampleLayout::Format::RealInt16) {
      write_i16(p, quantize(z.real()), layout.endian);
      p += 2;
    } else {
      const auto i = quantize(z.real());
      const auto q = quantize(z.imag());
      const bool iq = layout.order == SampleLayout::Order::IQ;
      write_i16(p, iq ? i : q, layout.endian);
      write_i16(p + 2, iq ? q : i, layout.endian);
      p += 4;
    }
  }
  return out;
}

RadarCube read_radar_capture(const std::filesystem::path& path, const RadarConfig& config,
                             const SampleLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open radar capture '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_radar_capture(bytes, config, layout);
  } catch (const SizeError& e) {
    throw SizeError(path.string() + ": " + e.what());
  }
}

void write_radar_capture(const std::filesystem::path& path, const RadarCube& cube,
                         const SampleLayout& layout) {
  const auto bytes = serialize_radar_capture(cube, layout);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write radar capture '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on '" + path.string() + "'");
}

ComplexMatrix zero_doppler_filter(const ComplexMatrix& frame) {
  ComplexMatrix out = frame;
  if (frame.rows == 0) return out;
  const double inv = 1.0 / static_cast<double>(frame.rows);
  for (std::size_t c = 0; c < frame.cols; ++c) {
    Complex mean = 0.0;
    for (std::size_t r = 0; r < frame.rows; ++r) mean += frame(r, c);
    mean *= inv;
    for (std::size_t r = 0; r < frame.rows; ++r) out(r, c) -= mean;
  }
  return out;
}

namespace {

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  }
  return w;
}

}  // namespace

RangeDopplerMap compute_range_doppler(const ComplexMatrix& frame, const RadarConfig& config,
                                      const RangeDopplerOptions& options) {
  if (frame.rows != config.chirps_per_frame || frame.cols != config.samples_per_chirp) {
    throw DimensionError("compute_range_doppler: frame is " + std::to_string(frame.rows) + "x" +
                         std::to_string(frame.cols) + ", config expects " +
                         std::to_string(config.chirps_per_frame) + "x" +
                         std::to_string(config.samples_per_chirp));
  }
  const std::size_t nc = frame.rows;
  const std::size_t ns = frame.cols;
  ComplexMatrix work = frame;
  if (options.hann_window) {
    const auto wr = hann(ns);
    const auto wd = hann(nc);
    for (std::size_t r = 0; r < nc; ++r)
      for (std::size_t c = 0; c < ns; ++c) work(r, c) *= wr[c] * wd[r];
  }
  for (std::size_t r = 0; r < nc; ++r) fft_inplace({&work.data[r * ns], ns});
  for (std::size_t c = 0; c < ns; ++c) fft_strided(&work.data[c], nc, ns);

  RangeDopplerMap map;
  map.doppler_bins = nc;
  map.range_bins = ns;
  map.magnitudes.resize(nc * ns);
  map.range_resolution = range_resolution(config);
  map.velocity_resolution = velocity_resolution(config);
  map.zero_doppler_bin = nc / 2;
  for (std::size_t d = 0; d < nc; ++d) {
    const std::size_t shifted = (d + nc / 2) % nc;
    for (std::size_t r = 0; r < ns; ++r) map(shifted, r) = std::abs(work(d, r));
  }
  return map;
}

namespace {

RangeDopplerMap process_frame(const RadarCube& cube, std::size_t f, bool filter,
                              const RangeDopplerOptions& options) {
  ComplexMatrix m = cube.frame(f);
  if (filter) m = zero_doppler_filter(m);
  return compute_range_doppler(m, cube.config(), options);
}

}  // namespace

std::vector<RangeDopplerMap> process_capture(const RadarCube& cube, bool filter_zero_doppler,
                                             const RangeDopplerOptions& options) {
  std::vector<RangeDopplerMap> maps(cube.frames());
  const auto n = static_cast<std::ptrdiff_t>(cube.frames());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t f = 0; f < n; ++f) {
    maps[static_cast<std::size_t>(f)] =
        process_frame(cube, static_cast<std::size_t>(f), filter_zero_doppler, options);
  }
  return maps;
}

std::vector<RangeDopplerMap> process_capture_serial(const RadarCube& cube,
                                                    bool filter_zero_doppler,
                                                    const RangeDopplerOptions& options) {
  std::vector<RangeDopplerMap> maps;
  maps.reserve(cube.frames());
  for (std::size_t f = 0; f < cube.frames(); ++f)
    maps.push_back(process_frame(cube, f, filter_zero_doppler, options));
  return maps;
}

std::size_t CfarConfig::training_count() const {
  const std::size_t outer = window();
  const std::size_t inner = 2 * guard_cells + 1;
  return outer * outer - inner * inner;
}

double CfarConfig::alpha() const {
  const double nt = static_cast<double>(training_count());
  return nt * (std::pow(probability_of_false_alarm, -1.0 / nt) - 1.0);
}

void CfarConfig::validate() const {
  if (training_cells < 1) throw ConfigError("cfar: training_cells must be >= 1");
  if (!(probability_of_false_alarm > 0.0 && probability_of_false_alarm < 1.0)) {
    throw ConfigError("cfar: probability_of_false_alarm must lie in (0, 1)");
  }
}

namespace {

void check_window(const RangeDopplerMap& map, const CfarConfig& cfg) {
  cfg.validate();
  const std::size_t w = cfg.window();
  if (w > map.doppler_bins || w > map.range_bins) {
    throw ConfigError("cfar: window " + std::to_string(w) + "x" + std::to_string(w) +
                      " does not fit map " + std::to_string(map.doppler_bins) + "x" +
                      std::to_string(map.range_bins));
  }
}

double sum_block(const RangeDopplerMap& map, std::size_t d0, std::size_t d1, std::size_t r0,
                 std::size_t r1) {
  double s = 0.0;
  for (std::size_t d = d0; d <= d1; ++d)
    for (std::size_t r = r0; r <= r1; ++r) s += map(d, r);
  return s;
}

// Threshold test for one interior cell: training sum is the outer square
// minus the guard square (which includes the cell under test).
bool test_cell(const RangeDopplerMap& map, const CfarConfig& cfg, double alpha, std::size_t d,
               std::size_t r, Detection& out) {
  const std::size_t half = cfg.guard_cells + cfg.training_cells;
  const std::size_t g = cfg.guard_cells;
  const double outer = sum_block(map, d - half, d + half, r - half, r + half);
  const double inner = sum_block(map, d - g, d + g, r - g, r + g);
  const double noise = (outer - inner) / static_cast<double>(cfg.training_count());
  const double threshold = alpha * noise;
  const double v = map(d, r);
  if (v > threshold) {
    out = Detection{d, r, v, threshold};
    return true;
  }
  return false;
}

}  // namespace

DetectionList cfar_2d_serial(const RangeDopplerMap& map, const CfarConfig& cfg) {
  check_window(map, cfg);
  const double alpha = cfg.alpha();
  const std::size_t half = cfg.guard_cells + cfg.training_cells;
  DetectionList out;
  for (std::size_t d = half; d + half < map.doppler_bins; ++d) {
    for (std::size_t r = half; r + half < map.range_bins; ++r) {
      Detection det{};
      if (test_cell(map, cfg, alpha, d, r, det)) out.push_back(det);
    }
  }
  return out;
}

DetectionList cfar_2d(const RangeDopplerMap& map, const CfarConfig& cfg) {
  check_window(map, cfg);
  const double alpha = cfg.alpha();
  const std::size_t half = cfg.guard_cells + cfg.training_cells;
  const std::size_t rows = map.doppler_bins - 2 * half;
  std::vector<DetectionList> per_row(rows);
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::size_t d = static_cast<std::size_t>(i) + half;
    auto& row = per_row[static_cast<std::size_t>(i)];
    for (std::size_t r = half; r + half < map.range_bins; ++r) {
      Detection det{};
      if (test_cell(map, cfg, alpha, d, r, det)) row.push_back(det);
    }
  }
  DetectionList out;
  for (auto& row : per_row) out.insert(out.end(), row.begin(), row.end());
  return out;
}

Grid2D to_model_input(const RangeDopplerMap& map) {
  if (map.magnitudes.empty()) throw DimensionError("to_model_input: empty map");
  Grid2D g{map.doppler_bins, map.range_bins, std::vector<double>(map.magnitudes.size())};
  std::transform(map.magnitudes.begin(), map.magnitudes.end(), g.data.begin(),
                 [](double m) { return std::log1p(m); });
  const auto [lo, hi] = std::minmax_element(g.data.begin(), g.data.end());
  const double mn = *lo;
  const double span = *hi - *lo;
  if (span <= 0.0) {
    std::fill(g.data.begin(), g.data.end(), 0.0);
    return g;
  }
  for (double& v : g.data) v = (v - mn) / span;
  return g;
}

void write_map_csv(const std::filesystem::path& path, const RangeDopplerMap& map) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  for (std::size_t d = 0; d < map.doppler_bins; ++d) {
    for (std::size_t r = 0; r < map.range_bins; ++r) {
      std::fprintf(f, r == 0 ? "%.9g" : ",%.9g", map(d, r));
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

std::vector<std::uint8_t> heatmap_pixels(const RangeDopplerMap& map, double dynamic_range_db) {
  const double full_scale = 32768.0 * static_cast<double>(map.doppler_bins) *
                            static_cast<double>(map.range_bins);
  std::vector<std::uint8_t> px(map.magnitudes.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double m = map.magnitudes[i];
    double level = 0.0;
    if (m > 0.0) {
      const double db = 20.0 * std::log10(m / full_scale);
      level = std::clamp((db + dynamic_range_db) / dynamic_range_db, 0.0, 1.0);
    }
    px[i] = static_cast<std::uint8_t>(std::lround(level * 255.0));
  }
  return px;
}

void write_heatmap_pgm(const std::filesystem::path& path, const RangeDopplerMap& map,
                       double dynamic_range_db) {
  const auto px = heatmap_pixels(map, dynamic_range_db);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "P5\n" << map.range_bins << ' ' << map.doppler_bins << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_detections_csv(const std::filesystem::path& path, const DetectionList& detections,
                          const RangeDopplerMap& map) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "doppler_bin,range_bin,range_m,velocity_mps,cell_value,threshold\n");
  for (const auto& d : detections) {
    const double range = static_cast<double>(d.range_bin) * map.range_resolution;
    const double vel = (static_cast<double>(d.doppler_bin) - static_cast<double>(map.zero_doppler_bin)) *
                       map.velocity_resolution;
    std::fprintf(f, "%zu,%zu,%.6f,%.6f,%.9g,%.9g\n", d.doppler_bin, d.range_bin, range, vel,
                 d.cell_value, d.threshold);
  }
  std::fclose(f);
}

}  // namespace dronefuse::radar
