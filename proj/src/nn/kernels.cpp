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
#include "dronefuse/nn/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace dronefuse::nn::kernels {
namespace {

using idx = std::ptrdiff_t;

// Output positions o in [lo, hi) for which o*stride + tap - padding lands in
// [0, n).
struct Range {
  idx lo, hi;
};

Range valid_range(idx n, idx out_n, idx tap, idx stride, idx padding) {
  const idx shift = tap - padding;
  idx lo = 0;
  if (shift < 0) lo = (-shift + stride - 1) / stride;
  idx hi = 0;
  if (n - shift > 0) hi = (n - shift + stride - 1) / stride;
  hi = std::min(hi, out_n);
  return {lo, std::max(lo, hi)};
}

void conv1d_fwd_channel(const Conv1dShape& s, const double* x, const double* w, const double* b,
                        double* y, idx co) {
  const idx lo_n = static_cast<idx>(s.out_length());
  const idx st = static_cast<idx>(s.stride);
  double* yo = y + co * lo_n;
  std::fill(yo, yo + lo_n, b ? b[co] : 0.0);
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = x + ci * static_cast<idx>(s.length);
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * static_cast<idx>(s.kernel);
    for (idx k = 0; k < static_cast<idx>(s.kernel); ++k) {
      const double wv = wr[k];
      const idx shift = k - static_cast<idx>(s.padding);
      const Range r = valid_range(static_cast<idx>(s.length), lo_n, k, st, static_cast<idx>(s.padding));
      if (st == 1) {
        for (idx l = r.lo; l < r.hi; ++l) yo[l] += wv * xi[l + shift];
      } else {
        for (idx l = r.lo; l < r.hi; ++l) yo[l] += wv * xi[l * st + shift];
      }
    }
  }
}

void conv1d_dx_channel(const Conv1dShape& s, const double* w, const double* dy, double* dx, idx ci) {
  const idx lo_n = static_cast<idx>(s.out_length());
  const idx st = static_cast<idx>(s.stride);
  double* dxi = dx + ci * static_cast<idx>(s.length);
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) {
    const double* dyo = dy + co * lo_n;
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * static_cast<idx>(s.kernel);
    for (idx k = 0; k < static_cast<idx>(s.kernel); ++k) {
      const double wv = wr[k];
      const idx shift = k - static_cast<idx>(s.padding);
      const Range r = valid_range(static_cast<idx>(s.length), lo_n, k, st, static_cast<idx>(s.padding));
      for (idx l = r.lo; l < r.hi; ++l) dxi[l * st + shift] += wv * dyo[l];
    }
  }
}

void conv1d_dw_channel(const Conv1dShape& s, const double* x, const double* dy, double* dw,
                       double* db, idx co) {
  const idx lo_n = static_cast<idx>(s.out_length());
  const idx st = static_cast<idx>(s.stride);
  const double* dyo = dy + co * lo_n;
  if (db) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (idx l = 0; l < lo_n; ++l) acc += dyo[l];
    db[co] += acc;
  }
  if (!dw) return;
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = x + ci * static_cast<idx>(s.length);
    double* dwr = dw + (co * static_cast<idx>(s.c_in) + ci) * static_cast<idx>(s.kernel);
    for (idx k = 0; k < static_cast<idx>(s.kernel); ++k) {
      const idx shift = k - static_cast<idx>(s.padding);
      const Range r = valid_range(static_cast<idx>(s.length), lo_n, k, st, static_cast<idx>(s.padding));
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (idx l = r.lo; l < r.hi; ++l) acc += dyo[l] * xi[l * st + shift];
      dwr[k] += acc;
    }
  }
}

void conv2d_fwd_channel(const Conv2dShape& s, const double* x, const double* w, const double* b,
                        double* y, idx co) {
  const idx oh = static_cast<idx>(s.out_height()), ow = static_cast<idx>(s.out_width());
  const idx H = static_cast<idx>(s.height), W = static_cast<idx>(s.width);
  const idx K = static_cast<idx>(s.kernel), st = static_cast<idx>(s.stride);
  const idx pad = static_cast<idx>(s.padding);
  double* yo = y + co * oh * ow;
  std::fill(yo, yo + oh * ow, b ? b[co] : 0.0);
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = x + ci * H * W;
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * K * K;
    for (idx kh = 0; kh < K; ++kh) {
      const Range rr = valid_range(H, oh, kh, st, pad);
      for (idx kw = 0; kw < K; ++kw) {
        const double wv = wr[kh * K + kw];
        const Range rc = valid_range(W, ow, kw, st, pad);
        const idx cshift = kw - pad;
        for (idx r = rr.lo; r < rr.hi; ++r) {
          const double* xrow = xi + (r * st + kh - pad) * W;
          double* yrow = yo + r * ow;
          if (st == 1) {
            for (idx c = rc.lo; c < rc.hi; ++c) yrow[c] += wv * xrow[c + cshift];
          } else {
            for (idx c = rc.lo; c < rc.hi; ++c) yrow[c] += wv * xrow[c * st + cshift];
          }
        }
      }
    }
  }
}

void conv2d_dx_channel(const Conv2dShape& s, const double* w, const double* dy, double* dx, idx ci) {
  const idx oh = static_cast<idx>(s.out_height()), ow = static_cast<idx>(s.out_width());
  const idx H = static_cast<idx>(s.height), W = static_cast<idx>(s.width);
  const idx K = static_cast<idx>(s.kernel), st = static_cast<idx>(s.stride);
  const idx pad = static_cast<idx>(s.padding);
  double* dxi = dx + ci * H * W;
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) {
    const double* dyo = dy + co * oh * ow;
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * K * K;
    for (idx kh = 0; kh < K; ++kh) {
      const Range rr = valid_range(H, oh, kh, st, pad);
      for (idx kw = 0; kw < K; ++kw) {
        const double wv = wr[kh * K + kw];
        const Range rc = valid_range(W, ow, kw, st, pad);
        const idx cshift = kw - pad;
        for (idx r = rr.lo; r < rr.hi; ++r) {
          double* dxrow = dxi + (r * st + kh - pad) * W;
          const double* dyrow = dyo + r * ow;
          for (idx c = rc.lo; c < rc.hi; ++c) dxrow[c * st + cshift] += wv * dyrow[c];
        }
      }
    }
  }
}

void conv2d_dw_channel(const Conv2dShape& s, const double* x, const double* dy, double* dw,
                       double* db, idx co) {
  const idx oh = static_cast<idx>(s.out_height()), ow = static_cast<idx>(s.out_width());
  const idx H = static_cast<idx>(s.height), W = static_cast<idx>(s.width);
  const idx K = static_cast<idx>(s.kernel), st = static_cast<idx>(s.stride);
  const idx pad = static_cast<idx>(s.padding);
  const double* dyo = dy + co * oh * ow;
  if (db) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (idx i = 0; i < oh * ow; ++i) acc += dyo[i];
    db[co] += acc;
  }
  if (!dw) return;
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = x + ci * H * W;
    double* dwr = dw + (co * static_cast<idx>(s.c_in) + ci) * K * K;
    for (idx kh = 0; kh < K; ++kh) {
      const Range rr = valid_range(H, oh, kh, st, pad);
      for (idx kw = 0; kw < K; ++kw) {
        const Range rc = valid_range(W, ow, kw, st, pad);
        const idx cshift = kw - pad;
        double acc = 0.0;
        for (idx r = rr.lo; r < rr.hi; ++r) {
          const double* xrow = xi + (r * st + kh - pad) * W;
          const double* dyrow = dyo + r * ow;
#pragma omp simd reduction(+ : acc)
          for (idx c = rc.lo; c < rc.hi; ++c) acc += dyrow[c] * xrow[c * st + cshift];
        }
        dwr[kh * K + kw] += acc;
      }
    }
  }
}

// Stride-1 1-D path on zero-padded rows. Taps are applied four at a time.
void correlate_row(double* acc, idx n, const double* src, const double* taps, idx K) {
  idx k = 0;
  for (; k + 4 <= K; k += 4) {
    const double w0 = taps[k], w1 = taps[k + 1], w2 = taps[k + 2], w3 = taps[k + 3];
    const double* s0 = src + k;
    for (idx i = 0; i < n; ++i) acc[i] += w0 * s0[i] + w1 * s0[i + 1] + w2 * s0[i + 2] + w3 * s0[i + 3];
  }
  for (; k < K; ++k) {
    const double wv = taps[k];
    const double* s0 = src + k;
    for (idx i = 0; i < n; ++i) acc[i] += wv * s0[i];
  }
}

struct Padded1d {
  idx L, K, pad, Lp, lo;
  std::vector<double> x;   // [c_in][Lp]
  std::vector<double> dy;  // [c_out][lo + 2(K-1)], K-1 zeros each side
  idx dy_pitch() const { return lo + 2 * (K - 1); }
};

Padded1d make_padded(const Conv1dShape& s, const double* x, const double* dy) {
  Padded1d p;
  p.L = static_cast<idx>(s.length);
  p.K = static_cast<idx>(s.kernel);
  p.pad = static_cast<idx>(s.padding);
  p.Lp = p.L + 2 * p.pad;
  p.lo = static_cast<idx>(s.out_length());
  if (x) {
    p.x.assign(static_cast<std::size_t>(p.Lp) * s.c_in, 0.0);
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) std::copy_n(x + ci * p.L, p.L, p.x.data() + ci * p.Lp + p.pad);
  }
  if (dy) {
    const idx pitch = p.dy_pitch();
    p.dy.assign(static_cast<std::size_t>(pitch) * s.c_out, 0.0);
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) std::copy_n(dy + co * p.lo, p.lo, p.dy.data() + co * pitch + p.K - 1);
  }
  return p;
}

void conv1d_fwd_fast(const Conv1dShape& s, const Padded1d& p, const double* w, const double* b, double* y, idx co) {
  double* yo = y + co * p.lo;
  std::fill(yo, yo + p.lo, b ? b[co] : 0.0);
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    correlate_row(yo, p.lo, p.x.data() + ci * p.Lp, w + (co * static_cast<idx>(s.c_in) + ci) * p.K, p.K);
  }
}

void conv1d_dx_fast(const Conv1dShape& s, const Padded1d& p, const double* w, double* dx, idx ci) {
  // dx[t] = sum_k w[k] dy[t + pad - k]: a correlation of the padded dy with
  // the flipped kernel.
  std::vector<double> flip(static_cast<std::size_t>(p.K));
  double* dxi = dx + ci * p.L;
  const idx pitch = p.dy_pitch();
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) {
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * p.K;
    for (idx k = 0; k < p.K; ++k) flip[static_cast<std::size_t>(k)] = wr[p.K - 1 - k];
    // Padded dy index of dy[t + pad - (K-1) + k'] is t + pad + k'.
    const double* src = p.dy.data() + co * pitch + p.pad;
    const idx n = std::min(p.L, pitch - p.pad - p.K + 1);
    correlate_row(dxi, n, src, flip.data(), p.K);
  }
}

void conv1d_dw_fast(const Conv1dShape& s, const Padded1d& p, double* dw, double* db, idx co) {
  const double* dyo = p.dy.data() + co * p.dy_pitch() + p.K - 1;
  if (db) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (idx l = 0; l < p.lo; ++l) acc += dyo[l];
    db[co] += acc;
  }
  if (!dw) return;
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = p.x.data() + ci * p.Lp;
    double* dwr = dw + (co * static_cast<idx>(s.c_in) + ci) * p.K;
    for (idx k = 0; k < p.K; ++k) {
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (idx l = 0; l < p.lo; ++l) acc += dyo[l] * xi[l + k];
      dwr[k] += acc;
    }
  }
}

// Stride-1 path. Planes are zero-padded and flattened with row pitch
// Wp = W + 2p; an output element (r, c) lives at r * Wp + c of a pitch-Wp
// grid, so every tap is one contiguous loop over the whole plane. Columns
// c >= ow of that grid are scratch and never read back.
struct Padded2d {
  idx H, W, K, pad, Hp, Wp, oh, ow, plane, grid;
  std::vector<double> x;   // [c_in][plane]
  std::vector<double> dy;  // [c_out][grid], zero in scratch columns
};

Padded2d make_padded(const Conv2dShape& s, const double* x, const double* dy) {
  Padded2d p;
  p.H = static_cast<idx>(s.height);
  p.W = static_cast<idx>(s.width);
  p.K = static_cast<idx>(s.kernel);
  p.pad = static_cast<idx>(s.padding);
  p.Hp = p.H + 2 * p.pad;
  p.Wp = p.W + 2 * p.pad;
  p.oh = static_cast<idx>(s.out_height());
  p.ow = static_cast<idx>(s.out_width());
  p.plane = p.Hp * p.Wp + p.K;
  p.grid = p.oh * p.Wp;
  if (x) {
    p.x.assign(static_cast<std::size_t>(p.plane) * s.c_in, 0.0);
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
      for (idx r = 0; r < p.H; ++r) {
        std::copy_n(x + (ci * p.H + r) * p.W, p.W, p.x.data() + ci * p.plane + (r + p.pad) * p.Wp + p.pad);
      }
    }
  }
  if (dy) {
    p.dy.assign(static_cast<std::size_t>(p.grid) * s.c_out, 0.0);
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) {
      for (idx r = 0; r < p.oh; ++r) std::copy_n(dy + (co * p.oh + r) * p.ow, p.ow, p.dy.data() + co * p.grid + r * p.Wp);
    }
  }
  return p;
}

void conv2d_fwd_fast(const Conv2dShape& s, const Padded2d& p, const double* w, const double* b, double* y, idx co) {
  std::vector<double> acc(static_cast<std::size_t>(p.grid), b ? b[co] : 0.0);
  double* a = acc.data();
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = p.x.data() + ci * p.plane;
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * p.K * p.K;
    for (idx kh = 0; kh < p.K; ++kh) {
      for (idx kw = 0; kw < p.K; ++kw) {
        const double wv = wr[kh * p.K + kw];
        const double* xs = xi + kh * p.Wp + kw;
        for (idx i = 0; i < p.grid; ++i) a[i] += wv * xs[i];
      }
    }
  }
  double* yo = y + co * p.oh * p.ow;
  for (idx r = 0; r < p.oh; ++r) std::copy_n(a + r * p.Wp, p.ow, yo + r * p.ow);
}

void conv2d_dx_fast(const Conv2dShape& s, const Padded2d& p, const double* w, double* dx, idx ci) {
  std::vector<double> acc(static_cast<std::size_t>(p.plane), 0.0);
  double* a = acc.data();
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) {
    const double* dyo = p.dy.data() + co * p.grid;
    const double* wr = w + (co * static_cast<idx>(s.c_in) + ci) * p.K * p.K;
    for (idx kh = 0; kh < p.K; ++kh) {
      for (idx kw = 0; kw < p.K; ++kw) {
        const double wv = wr[kh * p.K + kw];
        double* as = a + kh * p.Wp + kw;
        for (idx i = 0; i < p.grid; ++i) as[i] += wv * dyo[i];
      }
    }
  }
  double* dxi = dx + ci * p.H * p.W;
  for (idx r = 0; r < p.H; ++r) {
    const double* src = a + (r + p.pad) * p.Wp + p.pad;
    double* dst = dxi + r * p.W;
    for (idx c = 0; c < p.W; ++c) dst[c] += src[c];
  }
}

void conv2d_dw_fast(const Conv2dShape& s, const Padded2d& p, double* dw, double* db, idx co) {
  const double* dyo = p.dy.data() + co * p.grid;
  if (db) {
    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
    for (idx i = 0; i < p.grid; ++i) acc += dyo[i];
    db[co] += acc;
  }
  if (!dw) return;
  for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) {
    const double* xi = p.x.data() + ci * p.plane;
    double* dwr = dw + (co * static_cast<idx>(s.c_in) + ci) * p.K * p.K;
    for (idx kh = 0; kh < p.K; ++kh) {
      for (idx kw = 0; kw < p.K; ++kw) {
        const double* xs = xi + kh * p.Wp + kw;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (idx i = 0; i < p.grid; ++i) acc += dyo[i] * xs[i];
        dwr[kh * p.K + kw] += acc;
      }
    }
  }
}

}  // namespace

namespace serial {

void conv1d_forward(const Conv1dShape& s, const double* x, const double* w, const double* b, double* y) {
  if (s.stride == 1) {
    const Padded1d p = make_padded(s, x, nullptr);
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_fwd_fast(s, p, w, b, y, co);
    return;
  }
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_fwd_channel(s, x, w, b, y, co);
}

void conv1d_backward(const Conv1dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  if (s.stride == 1) {
    const Padded1d p = make_padded(s, dw ? x : nullptr, dy);
    if (dx)
      for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv1d_dx_fast(s, p, w, dx, ci);
    if (dw || db)
      for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_dw_fast(s, p, dw, db, co);
    return;
  }
  if (dx)
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv1d_dx_channel(s, w, dy, dx, ci);
  if (dw || db)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_dw_channel(s, x, dy, dw, db, co);
}

void conv2d_forward(const Conv2dShape& s, const double* x, const double* w, const double* b, double* y) {
  if (s.stride == 1) {
    const Padded2d p = make_padded(s, x, nullptr);
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_fwd_fast(s, p, w, b, y, co);
    return;
  }
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_fwd_channel(s, x, w, b, y, co);
}

void conv2d_backward(const Conv2dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  if (s.stride == 1) {
    const Padded2d p = make_padded(s, dw ? x : nullptr, dy);
    if (dx)
      for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv2d_dx_fast(s, p, w, dx, ci);
    if (dw || db)
      for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_dw_fast(s, p, dw, db, co);
    return;
  }
  if (dx)
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv2d_dx_channel(s, w, dy, dx, ci);
  if (dw || db)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_dw_channel(s, x, dy, dw, db, co);
}

}  // namespace serial

namespace parallel {

void conv1d_forward(const Conv1dShape& s, const double* x, const double* w, const double* b, double* y) {
  if (s.stride == 1) {
    const Padded1d p = make_padded(s, x, nullptr);
#pragma omp parallel for schedule(static)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_fwd_fast(s, p, w, b, y, co);
    return;
  }
#pragma omp parallel for schedule(static)
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_fwd_channel(s, x, w, b, y, co);
}

void conv1d_backward(const Conv1dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  if (s.stride == 1) {
    const Padded1d p = make_padded(s, dw ? x : nullptr, dy);
    if (dx) {
#pragma omp parallel for schedule(static)
      for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv1d_dx_fast(s, p, w, dx, ci);
    }
    if (dw || db) {
#pragma omp parallel for schedule(static)
      for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_dw_fast(s, p, dw, db, co);
    }
    return;
  }
  if (dx) {
#pragma omp parallel for schedule(static)
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv1d_dx_channel(s, w, dy, dx, ci);
  }
  if (dw || db) {
#pragma omp parallel for schedule(static)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv1d_dw_channel(s, x, dy, dw, db, co);
  }
}

void conv2d_forward(const Conv2dShape& s, const double* x, const double* w, const double* b, double* y) {
  if (s.stride == 1) {
    const Padded2d p = make_padded(s, x, nullptr);
#pragma omp parallel for schedule(static)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_fwd_fast(s, p, w, b, y, co);
    return;
  }
#pragma omp parallel for schedule(static)
  for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_fwd_channel(s, x, w, b, y, co);
}

void conv2d_backward(const Conv2dShape& s, const double* x, const double* w, const double* dy,
                     double* dx, double* dw, double* db) {
  if (s.stride == 1) {
    const Padded2d p = make_padded(s, dw ? x : nullptr, dy);
    if (dx) {
#pragma omp parallel for schedule(static)
      for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv2d_dx_fast(s, p, w, dx, ci);
    }
    if (dw || db) {
#pragma omp parallel for schedule(static)
      for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_dw_fast(s, p, dw, db, co);
    }
    return;
  }
  if (dx) {
#pragma omp parallel for schedule(static)
    for (idx ci = 0; ci < static_cast<idx>(s.c_in); ++ci) conv2d_dx_channel(s, w, dy, dx, ci);
  }
  if (dw || db) {
#pragma omp parallel for schedule(static)
    for (idx co = 0; co < static_cast<idx>(s.c_out); ++co) conv2d_dw_channel(s, x, dy, dw, db, co);
  }
}

}  // namespace parallel

}  // namespace dronefuse::nn::kernels
