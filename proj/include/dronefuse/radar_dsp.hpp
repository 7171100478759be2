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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dronefuse::radar {

inline constexpr double kSpeedOfLight = 299792458.0;

using Complex = std::complex<double>;

/// FMCW front-end parameters. Defaults are the AWR2243 capture settings;
/// chirp_repetition_interval is not part of the published table and is
/// back-solved from the 0.15 m/s velocity resolution.
struct RadarConfig {
  double start_frequency = 77e9;
  std::size_t samples_per_chirp = 256;
  std::size_t chirps_per_frame = 128;
  std::size_t frames_per_capture = 256;
  double sampling_rate = 10e6;
  double chirp_slope = 29.98e12;  // Hz/s
  double bandwidth = 0.76e9;
  double chirp_repetition_interval = 1.014e-4;
  double frame_period = 0.04;

  double carrier_wavelength() const { return kSpeedOfLight / start_frequency; }

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

double range_resolution(const RadarConfig& config);
double velocity_resolution(const RadarConfig& config);

/// Row-major complex matrix, rows = chirps (slow time), cols = samples
/// (fast time).
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Complex> data;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  Complex& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// On-disk sample layout of a raw capture file.
struct SampleLayout {
  enum class Format { ComplexInt16, RealInt16 };
  enum class Endian { Little, Big };
  enum class Order { IQ, QI };

  Format format = Format::ComplexInt16;
  Endian endian = Endian::Little;
  Order order = Order::IQ;

  std::size_t bytes_per_sample() const { return format == Format::ComplexInt16 ? 4 : 2; }

  /// Tags: cint16_le_iq (default), cint16_le_qi, cint16_be_iq, cint16_be_qi,
  /// rint16_le, rint16_be. Unknown tags throw ConfigError.
  static SampleLayout from_tag(const std::string& tag);
  std::string tag() const;
};

/// Complex ADC samples indexed [frame][chirp][sample].
class RadarCube {
 public:
  explicit RadarCube(RadarConfig config);

  const RadarConfig& config() const { return config_; }
  std::size_t frames() const { return config_.frames_per_capture; }
  std::size_t chirps() const { return config_.chirps_per_frame; }
  std::size_t samples() const { return config_.samples_per_chirp; }

  Complex& at(std::size_t f, std::size_t c, std::size_t s) {
    return data_[(f * chirps() + c) * samples() + s];
  }
  const Complex& at(std::size_t f, std::size_t c, std::size_t s) const {
    return data_[(f * chirps() + c) * samples() + s];
  }

  ComplexMatrix frame(std::size_t f) const;
  void set_frame(std::size_t f, const ComplexMatrix& m);

  std::span<const Complex> raw() const { return data_; }

 private:
  RadarConfig config_;
  std::vector<Complex> data_;
};

RadarCube parse_radar_capture(std::span<const std::uint8_t> bytes, const RadarConfig& config,
                              const SampleLayout& layout = {});

/// Inverse of parse_radar_capture. Values are rounded to the nearest int16
/// code and saturated.
std::vector<std::uint8_t> serialize_radar_capture(const RadarCube& cube,
                                                  const SampleLayout& layout = {});

RadarCube read_radar_capture(const std::filesystem::path& path, const RadarConfig& config,
                             const SampleLayout& layout = {});
void write_radar_capture(const std::filesystem::path& path, const RadarCube& cube,
                         const SampleLayout& layout = {});

/// Slow-time DC notch: subtracts the per-column mean across chirps.
ComplexMatrix zero_doppler_filter(const ComplexMatrix& frame);

/// Magnitudes indexed [doppler_bin][range_bin], zero Doppler at bin
/// chirps/2.
struct RangeDopplerMap {
  std::size_t doppler_bins = 0;
  std::size_t range_bins = 0;
  std::vector<double> magnitudes;
  double range_resolution = 0.0;
  double velocity_resolution = 0.0;
  std::size_t zero_doppler_bin = 0;

  double operator()(std::size_t d, std::size_t r) const { return magnitudes[d * range_bins + r]; }
  double& operator()(std::size_t d, std::size_t r) { return magnitudes[d * range_bins + r]; }
};

struct RangeDopplerOptions {
  bool hann_window = false;
};

RangeDopplerMap compute_range_doppler(const ComplexMatrix& frame, const RadarConfig& config,
                                      const RangeDopplerOptions& options = {});

/// Whole-capture processing (optional zero-Doppler filter, then
/// range-Doppler). The parallel version fans frames out over OpenMP threads;
/// the serial one is the reference it is tested against.
std::vector<RangeDopplerMap> process_capture(const RadarCube& cube, bool filter_zero_doppler,
                                             const RangeDopplerOptions& options = {});
std::vector<RangeDopplerMap> process_capture_serial(const RadarCube& cube,
                                                    bool filter_zero_doppler,
                                                    const RangeDopplerOptions& options = {});

struct CfarConfig {
  std::size_t guard_cells = 2;
  std::size_t training_cells = 4;
  double probability_of_false_alarm = 1e-3;

  std::size_t window() const { return 2 * (guard_cells + training_cells) + 1; }
  std::size_t training_count() const;
  /// CA-CFAR scale factor N_t * (p_fa^(-1/N_t) - 1).
  double alpha() const;
  void validate() const;
};

struct Detection {
  std::size_t doppler_bin;
  std::size_t range_bin;
  double cell_value;
  double threshold;

  friend bool operator==(const Detection&, const Detection&) = default;
};

using DetectionList = std::vector<Detection>;

/// 2-D cell-averaging CFAR over the map's magnitudes. Cells whose window
/// does not fit are never detected. Detections are ordered row-major.
DetectionList cfar_2d(const RangeDopplerMap& map, const CfarConfig& cfg);
DetectionList cfar_2d_serial(const RangeDopplerMap& map, const CfarConfig& cfg);

/// A conditioned map for the 2-D encoder: log1p then per-map min-max to
/// [0, 1]. Constant maps become all zeros.
struct Grid2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
};

Grid2D to_model_input(const RangeDopplerMap& map);

/// CSV with one line per Doppler bin.
void write_map_csv(const std::filesystem::path& path, const RangeDopplerMap& map);

/// Binary PGM heatmap in dB relative to int16 full scale after both FFTs
/// (32768 * chirps * samples), spanning dynamic_range_db down to black.
void write_heatmap_pgm(const std::filesystem::path& path, const RangeDopplerMap& map,
                       double dynamic_range_db = 80.0);
std::vector<std::uint8_t> heatmap_pixels(const RangeDopplerMap& map,
                                         double dynamic_range_db = 80.0);

void write_detections_csv(const std::filesystem::path& path, const DetectionList& detections,
                          const RangeDopplerMap& map);

}  // namespace dronefuse::radar
