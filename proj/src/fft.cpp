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
#include "dronefuse/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace dronefuse {
namespace {

// fftw_plan_* is not thread-safe, fftw_execute_dft on an existing plan is.
// Plans are created once per length under the lock and reused with
// new-array execution.
fftw_plan plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<std::complex<double>> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, p);
  return p;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> x) {
  if (x.size() <= 1) return;
  auto* buf = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(plan_for(x.size()), buf, buf);
}

void fft_strided(std::complex<double>* x, std::size_t n, std::size_t stride) {
  if (stride == 1) {
    fft_inplace({x, n});
    return;
  }
  std::vector<std::complex<double>> tmp(n);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i * stride];
  fft_inplace(tmp);
  for (std::size_t i = 0; i < n; ++i) x[i * stride] = tmp[i];
}

}  // namespace dronefuse
