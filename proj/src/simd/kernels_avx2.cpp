// Copyright 2026 The S5 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 -mfma. Nothing here may run before the dispatcher has
// confirmed CPU support.
#include "s5/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace s5::simd::avx2 {
namespace {

// One row of c = a * b, 16 columns per register block. Every element, in the
// vector body and in the tail alike, is a chain of fused multiply-adds over
// ascending t.
inline void row_nn(std::size_t k, std::size_t n, const double* ai,
                   const double* b, double* ci, bool accumulate) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d c0 = accumulate ? _mm256_loadu_pd(ci + j) : _mm256_setzero_pd();
    __m256d c1 = accumulate ? _mm256_loadu_pd(ci + j + 4) : _mm256_setzero_pd();
    __m256d c2 = accumulate ? _mm256_loadu_pd(ci + j + 8) : _mm256_setzero_pd();
    __m256d c3 = accumulate ? _mm256_loadu_pd(ci + j + 12) : _mm256_setzero_pd();
    for (std::size_t t = 0; t < k; ++t) {
      const __m256d av = _mm256_broadcast_sd(ai + t);
      const double* bt = b + t * n + j;
      c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt), c0);
      c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 4), c1);
      c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 8), c2);
      c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bt + 12), c3);
    }
    _mm256_storeu_pd(ci + j, c0);
    _mm256_storeu_pd(ci + j + 4, c1);
    _mm256_storeu_pd(ci + j + 8, c2);
    _mm256_storeu_pd(ci + j + 12, c3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = accumulate ? _mm256_loadu_pd(ci + j) : _mm256_setzero_pd();
    for (std::size_t t = 0; t < k; ++t) {
      c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(ai + t),
                           _mm256_loadu_pd(b + t * n + j), c0);
    }
    _mm256_storeu_pd(ci + j, c0);
  }
  for (; j < n; ++j) {
    double acc = accumulate ? ci[j] : 0.0;
    for (std::size_t t = 0; t < k; ++t) acc = std::fma(ai[t], b[t * n + j], acc);
    ci[j] = acc;
  }
}

void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) row_nn(k, n, a + i * k, b, c + i * n, accumulate);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  // Rank-1 updates in ascending t keep the per-element accumulation order.
  for (std::size_t t = 0; t < k; ++t) {
    const double* at = a + t * m;
    const double* bt = b + t * n;
    for (std::size_t i = 0; i < m; ++i) axpy(n, at[i], bt, c + i * n);
  }
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  }
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s = std::fma(x[i], y[i], s);
  return s;
}

void gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
             const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dot(k, a + i * k, b + j * k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::Avx2, gemm_nn, gemm_tn, gemm_nt, axpy, dot};
  return t;
}

}  // namespace s5::simd::avx2
