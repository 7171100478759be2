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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "dronefuse/error.hpp"
#include "dronefuse/fft.hpp"
#include "dronefuse/synthgen.hpp"
#include "test_util.hpp"

using namespace dronefuse;
using namespace dronefuse::synth;

namespace {

std::vector<double> magnitude_spectrum(std::span<const double> x) {
  std::vector<std::complex<double>> X(x.begin(), x.end());
  fft_inplace(X);
  std::vector<double> m(x.size() / 2);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::abs(X[k]);
  return m;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

long circular_distance(long a, long b, long n) {
  const long d = std::labs(a - b) % n;
  return std::min(d, n - d);
}

radar::RangeDopplerMap filtered_map(const RadarSceneSpec& s, const radar::RadarConfig& c, std::uint64_t seed) {
  return radar::compute_range_doppler(radar::zero_doppler_filter(synth_radar_frame(s, c, seed)), c);
}

}  // namespace

TEST_SUITE("acoustic synthesis") {
  TEST_CASE("single harmonic without AM or noise is a pure tone on the expected bin") {
    DroneAcousticSpec s;
    s.harmonic_count = 1;
    s.am_depth = 0.0;
    s.noise_level = 0.0;
    for (double bpf : {110.0, 137.5, 300.0, 1234.0}) {
      s.blade_pass_frequency = bpf;
      const auto clip = synth_acoustic(s, 0.5, 16000, 3);
      REQUIRE(clip.length() == 8000);
      const auto m = magnitude_spectrum(clip.channels[0]);
      const auto peak = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
      CHECK(peak == static_cast<std::size_t>(std::lround(bpf * 8000 / 16000)));
      double mx = 0.0;
      for (double v : clip.channels[0]) mx = std::max(mx, std::abs(v));
      CHECK(mx == 1.0);
    }
  }
  TEST_CASE("determinism and aliasing guard") {
    const DroneAcousticSpec s;
    CHECK(synth_acoustic(s, 0.25, 16000, 9).channels == synth_acoustic(s, 0.25, 16000, 9).channels);
    CHECK(synth_acoustic(s, 0.25, 16000, 9).channels != synth_acoustic(s, 0.25, 16000, 10).channels);
    DroneAcousticSpec bad = s;
    bad.blade_pass_frequency = 8000;
    CHECK_THROWS_AS(synth_acoustic(bad, 0.1, 16000, 0), SpecError);
    CHECK_THROWS_AS(synth_acoustic(s, 0.0, 16000, 0), SpecError);
    bad = s;
    bad.harmonic_count = 0;
    bad.noise_level = 0.0;
    CHECK_THROWS_AS(synth_acoustic(bad, 0.1, 16000, 0), SpecError);
  }
  TEST_CASE("ambient scenes show no peaks at any drone harmonic") {
    const auto lib = ClassLibrary::default_library();
    const radar::RadarConfig rc;
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      KeyedStream rng{11, trial};
      const auto scene = draw_scene(lib, 0, rc, rng);
      const auto clip = synth_acoustic(scene.acoustic, 4.0, 16000, trial);
      // Mean magnitude spectrum of four 1 s pieces, 1 Hz bins.
      std::vector<double> avg(8000, 0.0);
      for (std::size_t p = 0; p < 4; ++p) {
        const auto m = magnitude_spectrum(std::span(clip.channels[0]).subspan(p * 16000, 16000));
        for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += m[k] / 4;
      }
      for (std::size_t c = 1; c < 5; ++c) {
        const double bpf = lib.classes[c].acoustic.blade_pass_frequency;
        for (std::size_t h = 1; h <= lib.classes[c].max_harmonics; ++h) {
          const auto k = static_cast<std::size_t>(std::lround(h * bpf));
          const std::vector<double> local(avg.begin() + static_cast<long>(k) - 50, avg.begin() + static_cast<long>(k) + 51);
          CHECK(avg[k] < 3.0 * median(local));
        }
      }
    }
  }
  TEST_CASE("every drone sample peaks on its fundamental or a harmonic") {
    const auto lib = ClassLibrary::default_library();
    const radar::RadarConfig rc;
    std::size_t checked = 0;
    for (std::size_t c = 1; c < 5; ++c) {
      for (std::uint64_t i = 0; i < 40; ++i) {
        KeyedStream rng{21, c, i};
        const auto scene = draw_scene(lib, c, rc, rng);
        const auto m = magnitude_spectrum(synth_acoustic(scene.acoustic, 1.0, 16000, hash_key({c, i})).channels[0]);
        const auto peak = static_cast<double>(std::max_element(m.begin() + 1, m.end()) - m.begin());
        bool on_harmonic = false;
        for (std::size_t h = 1; h <= scene.acoustic.harmonic_count; ++h) {
          on_harmonic = on_harmonic || std::abs(peak - h * scene.acoustic.blade_pass_frequency) <= 1.5;
        }
        CHECK(on_harmonic);
        ++checked;
      }
    }
    CHECK(checked == 160);
  }
  TEST_CASE("nearest-centroid classification on noise-free spectra reaches 90%") {
    const auto lib = ClassLibrary::default_library();
    const radar::RadarConfig rc;
    auto features = [&](std::size_t c, std::uint64_t i) {
      KeyedStream rng{31, c, i};
      auto scene = draw_scene(lib, c, rc, rng);
      if (c != 0) scene.acoustic.noise_level = 0.0;
      auto m = magnitude_spectrum(synth_acoustic(scene.acoustic, 0.5, 16000, hash_key({31, c, i})).channels[0]);
      m.resize(1000);  // 0-2 kHz at 2 Hz bins
      double norm = 0.0;
      for (double v : m) norm += v * v;
      for (double& v : m) v /= std::sqrt(norm);
      return m;
    };
    std::vector<std::vector<double>> centroids(5, std::vector<double>(1000, 0.0));
    for (std::size_t c = 0; c < 5; ++c) {
      for (std::uint64_t i = 0; i < 20; ++i) {
        const auto f = features(c, i);
        for (std::size_t k = 0; k < 1000; ++k) centroids[c][k] += f[k] / 20;
      }
    }
    std::size_t correct = 0, total = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      for (std::uint64_t i = 100; i < 120; ++i) {
        const auto f = features(c, i);
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t q = 0; q < 5; ++q) {
          double d = 0.0;
          for (std::size_t k = 0; k < 1000; ++k) d += (f[k] - centroids[q][k]) * (f[k] - centroids[q][k]);
          if (d < best_d) best_d = d, best = q;
        }
        correct += best == c;
        ++total;
      }
    }
    MESSAGE("nearest-centroid accuracy " << correct << "/" << total);
    CHECK(static_cast<double>(correct) / total >= 0.9);
  }
}

TEST_SUITE("radar synthesis") {
  TEST_CASE("10 m static target peaks at (64, 51); 3 m/s moves it to Doppler bin 84") {
    const radar::RadarConfig c;
    RadarSceneSpec s;
    s.range = 10.0;
    s.velocity = 0.0;
    auto m = radar::compute_range_doppler(synth_radar_frame(s, c, 1), c);
    CHECK(testutil::argmax(m) == std::pair<std::size_t, std::size_t>{64, 51});
    CHECK(analytic_bins(s, c) == std::pair<long, long>{64, 51});
    s.velocity = 3.0;
    m = radar::compute_range_doppler(synth_radar_frame(s, c, 1), c);
    CHECK(testutil::argmax(m) == std::pair<std::size_t, std::size_t>{84, 51});
    CHECK(analytic_bins(s, c) == std::pair<long, long>{84, 51});
  }
  TEST_CASE("clutter-only frame loses at least 40 dB through the zero-Doppler filter") {
    const radar::RadarConfig c;
    RadarSceneSpec s;
    s.has_target = false;
    s.clutter = {{4.0, 3000.0}, {17.3, 1500.0}, {33.0, 800.0}};
    const auto raw = radar::compute_range_doppler(synth_radar_frame(s, c, 2), c);
    double at_zero = 0.0;
    for (std::size_t r = 0; r < raw.range_bins; ++r) at_zero += raw(64, r) * raw(64, r);
    CHECK(at_zero / testutil::energy(raw) > 1.0 - 1e-12);
    const auto filt = filtered_map(s, c, 2);
    CHECK(10.0 * std::log10(testutil::energy(raw) / std::max(testutil::energy(filt), 1e-300)) >= 40.0);
  }
  TEST_CASE("noise-free generated scenes peak at their analytic bins") {
    const auto lib = ClassLibrary::default_library();
    const radar::RadarConfig c;
    for (std::size_t cls = 1; cls < 5; ++cls) {
      for (std::uint64_t i = 0; i < 25; ++i) {
        KeyedStream rng{41, cls, i};
        auto scene = draw_scene(lib, cls, c, rng).radar;
        scene.noise_std = 0.0;
        const auto [ad, ar] = analytic_bins(scene, c);
        const auto [pd, pr] = testutil::argmax(filtered_map(scene, c, i));
        CAPTURE(scene.velocity);
        CHECK(circular_distance(static_cast<long>(pd), ad, 128) <= 1);
        CHECK(std::labs(static_cast<long>(pr) - ar) <= 1);
      }
    }
  }
  TEST_CASE("scene validation") {
    const radar::RadarConfig c;
    RadarSceneSpec s;
    s.range = 1e4;
    CHECK_THROWS_AS(synth_radar_frame(s, c, 0), SpecError);
    s = {};
    s.velocity = 50.0;
    CHECK_THROWS_AS(synth_radar_frame(s, c, 0), SpecError);
    s = {};
    s.amplitude = -1;
    CHECK_THROWS_AS(synth_radar_frame(s, c, 0), SpecError);
    auto lib = ClassLibrary::default_library();
    lib.classes[2].acoustic.blade_pass_frequency = 115.0;
    CHECK_THROWS_AS(lib.validate(), SpecError);
    // The last range bin is reachable; the sampled beat span is the limit.
    const double r_max = c.sampling_rate * radar::kSpeedOfLight / (2.0 * c.chirp_slope);
    s = {};
    s.range = r_max * (1.0 - 0.5 / c.samples_per_chirp);
    CHECK(analytic_bins(s, c).second == static_cast<long>(c.samples_per_chirp) - 1);
    CHECK(testutil::argmax(radar::compute_range_doppler(synth_radar_frame(s, c, 0), c)).second ==
          c.samples_per_chirp - 1);
    s.range = r_max;
    CHECK_THROWS_AS(synth_radar_frame(s, c, 0), SpecError);
    KeyedStream rng(0);
    CHECK_THROWS_AS(draw_scene(ClassLibrary::default_library(), 5, c, rng), IndexError);
  }
}

TEST_SUITE("datasets") {
  TEST_CASE("20-record dataset round-trips through the real parsers, byte-identical on regeneration") {
    testutil::TempDir d1("gen1"), d2("gen2");
    GenOptions opt;
    opt.radar = testutil::small_radar();
    opt.clip_samples = 4000;
    const auto lib = ClassLibrary::default_library();
    const auto man = gen_dataset(lib, 4, d1.path(), 17, opt);
    REQUIRE(man.records.size() == 20);
    CHECK_NOTHROW(man.validate());
    const auto again = load_manifest(d1 / "manifest.jsonl");
    REQUIRE(again.records.size() == 20);
    std::size_t peak_code = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      const auto& r = again.records[i];
      CHECK(r.id == man.records[i].id);
      CHECK(r.class_label == i / 4);
      CHECK(r.detection_label == (i >= 4 ? 1u : 0u));
      CHECK(r.provenance == "synthetic");
      const auto clip = acoustic::read_wav(again.resolve(r.acoustic_path));
      CHECK(clip.channel_count() == 2);
      CHECK(clip.length() == 4000);
      CHECK(clip.sample_rate == 16000);
      const auto cube = radar::read_radar_capture(again.resolve(r.radar_path), opt.radar);
      for (const auto& v : cube.raw()) {
        peak_code = std::max<std::size_t>(peak_code, static_cast<std::size_t>(std::max(std::abs(v.real()), std::abs(v.imag()))));
      }
      // Reproduce the first frame from the scene and compare within one LSB.
      KeyedStream rng{17, hash_string(r.id), 0};
      const auto scene = draw_scene(lib, r.class_label, opt.radar, rng);
      const auto ref = synth_radar_frame(scene.radar, opt.radar, hash_key({17, hash_string(r.id), 2, 0}));
      const auto got = cube.frame(0);
      double worst = 0.0;
      for (std::size_t k = 0; k < ref.data.size(); ++k) {
        worst = std::max({worst, std::abs(got.data[k].real() - ref.data[k].real()),
                          std::abs(got.data[k].imag() - ref.data[k].imag())});
      }
      CHECK(worst <= 1.0);
    }
    // At least 12 bits of the int16 range in use, never saturated.
    CHECK(peak_code >= 2048);
    CHECK(peak_code < 32767);
    gen_dataset(lib, 4, d2.path(), 17, opt);
    for (const auto& r : man.records) {
      CHECK(testutil::file_bytes(d1 / r.acoustic_path) == testutil::file_bytes(d2 / r.acoustic_path));
      CHECK(testutil::file_bytes(d1 / r.radar_path) == testutil::file_bytes(d2 / r.radar_path));
    }
    CHECK(testutil::file_bytes(d1 / "manifest.jsonl") == testutil::file_bytes(d2 / "manifest.jsonl"));
  }
  TEST_CASE("different seed gives different files; n = 0 and unwritable paths are rejected") {
    testutil::TempDir d1("gen3"), d2("gen4");
    GenOptions opt;
    opt.radar = testutil::small_radar();
    opt.clip_samples = 1000;
    const auto lib = ClassLibrary::default_library();
    const auto a = gen_dataset(lib, 1, d1.path(), 1, opt);
    gen_dataset(lib, 1, d2.path(), 2, opt);
    CHECK(testutil::file_bytes(d1 / a.records[3].radar_path) != testutil::file_bytes(d2 / a.records[3].radar_path));
    CHECK_THROWS_AS(gen_dataset(lib, 0, d1.path(), 1, opt), ConfigError);
    std::ofstream(d1 / "blocker") << "x";
    CHECK_THROWS_AS(gen_dataset(lib, 1, d1 / "blocker" / "sub", 1, opt), IoError);
  }
  TEST_CASE("manifest validation and JSON-lines parsing") {
    testutil::TempDir d("manifest");
    DatasetManifest m;
    ManifestRecord r;
    r.id = "x";
    r.class_label = 2;
    r.detection_label = 0;
    m.records = {r};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    std::ofstream(d / "bad.jsonl") << "{\"id\": 1\n";
    CHECK_THROWS_AS(load_manifest(d / "bad.jsonl"), ParseError);
    CHECK_THROWS_AS(load_manifest(d / "none.jsonl"), IoError);
  }
}
