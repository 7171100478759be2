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

// Convolution kernels. `serial` is the plain reference; `parallel` splits the
// outermost channel loop over OpenMP threads. Every output element is
// accumulated in the same order by both, so their results are bitwise equal.
//
// Layouts: x [c_in, L] / [c_in, H, W], w [c_out, c_in, k] / [c_out, c_in, k, k],
// y [c_out, L_out] / [c_out, H_out, W_out]. Backward passes accumulate (+=)
// into dx, dw and db; any of them may be null.

namespace dronefuse::nn::kernels {

struct Conv1dShape {
  std::size_t c_in, length, c_out, kernel, stride, padding;
  std::size_t out_length() const { return (length + 2 * padding - kernel) / stride + 1; }
};

struct Conv2dShape {
  std::size_t c_in, height, width, c_out, kernel, stride, padding;
  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
};

namespace serial {
void conv1d_forward(const Conv1dShape& s, const double* x, const double* w, const double* b, double* y);
void conv1d_backward(const Conv1dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);
void conv2d_forward(const Conv2dShape& s, const double* x, const double* w, const double* b, double* y);
void conv2d_backward(const Conv2dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);
}  // namespace serial

namespace parallel {
void conv1d_forward(const Conv1dShape& s, const double* x, const double* w, const double* b, double* y);
void conv1d_backward(const Conv1dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);
void conv2d_forward(const Conv2dShape& s, const double* x, const double* w, const double* b, double* y);
void conv2d_backward(const Conv2dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db);
}  // namespace parallel

}  // namespace dronefuse::nn::kernels
