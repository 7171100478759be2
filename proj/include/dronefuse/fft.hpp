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
#include <span>

namespace dronefuse {

/// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N), in
/// place. Backed by FFTW; safe to call from several threads at once.
void fft_inplace(std::span<std::complex<double>> x);

/// Strided variant: transforms x[0], x[stride], ..., x[(n-1)*stride].
void fft_strided(std::complex<double>* x, std::size_t n, std::size_t stride);

}  // namespace dronefuse
