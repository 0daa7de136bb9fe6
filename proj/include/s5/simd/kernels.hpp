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

#pragma once

// Dense double-precision kernels behind the tensor layer.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID; the
// environment variable S5_SIMD=scalar forces the reference path.
//
// Both variants share one numerical contract that the model relies on:
// each output element of gemm_nn and gemm_tn is accumulated over the inner
// index in ascending order, starting from 0 (or from the existing value when
// accumulating). The result for element (i, j) therefore does not depend on
// how many columns are computed in the same call, which is what lets a
// column-split expert layer reproduce an unsplit layer bit for bit.

#include <cstddef>
#include <string_view>

namespace s5::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  // c[m x n] (+)= a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[m x n] (+)= a[k x m]^T * b[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  // c[m x n] (+)= a[m x k] * b[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
};

const KernelTable& scalar_kernels();

/// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// The table selected for this process.
const KernelTable& kernels();

std::string_view isa_name(Isa isa);

}  // namespace s5::simd
