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
// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to the
// core count; on one core the pairs should time the same.

#include <benchmark/benchmark.h>

#include <vector>

#include "dronefuse/nn/kernels.hpp"
#include "dronefuse/radar_dsp.hpp"
#include "dronefuse/rng.hpp"
#include "dronefuse/synthgen.hpp"

namespace {

using namespace dronefuse;
namespace k = nn::kernels;

std::vector<double> random_vec(std::size_t n, std::uint64_t key) {
  KeyedStream rng(key);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Acoustic large-kernel branch at the paper's widths.
const k::Conv1dShape kConv1d{32, 2000, 32, 107, 1, 53};
// Range-Doppler 5x5 block on the toy map.
const k::Conv2dShape kConv2d{16, 64, 128, 16, 5, 1, 2};

template <auto Fn>
void BM_conv1d_forward(benchmark::State& state) {
  const auto& s = kConv1d;
  auto x = random_vec(s.c_in * s.length, 1), w = random_vec(s.c_out * s.c_in * s.kernel, 2), b = random_vec(s.c_out, 3);
  std::vector<double> y(s.c_out * s.out_length());
  for (auto _ : state) {
    Fn(s, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * s.c_out * s.c_in * s.kernel * s.out_length());
}

template <auto Fn>
void BM_conv1d_backward(benchmark::State& state) {
  const auto& s = kConv1d;
  auto x = random_vec(s.c_in * s.length, 1), w = random_vec(s.c_out * s.c_in * s.kernel, 2);
  auto dy = random_vec(s.c_out * s.out_length(), 4);
  std::vector<double> dx(x.size()), dw(w.size()), db(s.c_out);
  for (auto _ : state) {
    Fn(s, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

template <auto Fn>
void BM_conv2d_forward(benchmark::State& state) {
  const auto& s = kConv2d;
  auto x = random_vec(s.c_in * s.height * s.width, 1);
  auto w = random_vec(s.c_out * s.c_in * s.kernel * s.kernel, 2), b = random_vec(s.c_out, 3);
  std::vector<double> y(s.c_out * s.out_height() * s.out_width());
  for (auto _ : state) {
    Fn(s, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void BM_conv2d_backward(benchmark::State& state) {
  const auto& s = kConv2d;
  auto x = random_vec(s.c_in * s.height * s.width, 1);
  auto w = random_vec(s.c_out * s.c_in * s.kernel * s.kernel, 2);
  auto dy = random_vec(s.c_out * s.out_height() * s.out_width(), 4);
  std::vector<double> dx(x.size()), dw(w.size()), db(s.c_out);
  for (auto _ : state) {
    Fn(s, x.data(), w.data(), dy.data(), dx.data(), dw.data(), db.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

radar::RangeDopplerMap paper_map() {
  radar::RadarConfig cfg;
  cfg.frames_per_capture = 1;
  const auto lib = synth::ClassLibrary::default_library();
  KeyedStream rng(9);
  const auto scene = synth::draw_scene(lib, 1, cfg, rng);
  return radar::compute_range_doppler(radar::zero_doppler_filter(synth::synth_radar_frame(scene.radar, cfg, 10)), cfg);
}

template <auto Fn>
void BM_cfar(benchmark::State& state) {
  const auto map = paper_map();
  const radar::CfarConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(map, cfg));
}

radar::RadarCube capture(std::size_t frames) {
  radar::RadarConfig cfg;
  cfg.frames_per_capture = frames;
  const auto lib = synth::ClassLibrary::default_library();
  KeyedStream rng(11);
  const auto scene = synth::draw_scene(lib, 2, cfg, rng);
  radar::RadarCube cube(cfg);
  for (std::size_t f = 0; f < frames; ++f) cube.set_frame(f, synth::synth_radar_frame(scene.radar, cfg, 12 + f));
  return cube;
}

template <auto Fn>
void BM_process_capture(benchmark::State& state) {
  const auto cube = capture(8);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(cube, true, {}));
}

}  // namespace

BENCHMARK(BM_conv1d_forward<k::serial::conv1d_forward>)->Name("conv1d_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv1d_forward<k::parallel::conv1d_forward>)->Name("conv1d_forward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv1d_backward<k::serial::conv1d_backward>)->Name("conv1d_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv1d_backward<k::parallel::conv1d_backward>)->Name("conv1d_backward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_forward<k::serial::conv2d_forward>)->Name("conv2d_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_forward<k::parallel::conv2d_forward>)->Name("conv2d_forward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_backward<k::serial::conv2d_backward>)->Name("conv2d_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_backward<k::parallel::conv2d_backward>)->Name("conv2d_backward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cfar<radar::cfar_2d_serial>)->Name("cfar_2d/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cfar<radar::cfar_2d>)->Name("cfar_2d/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_process_capture<radar::process_capture_serial>)->Name("process_capture/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_process_capture<radar::process_capture>)->Name("process_capture/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
