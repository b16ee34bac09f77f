// Copyright 2026 The Tabsal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TABSAL_KERNELS_HPP_
#define TABSAL_KERNELS_HPP_

namespace tabsal::kernels {

// Double-precision dense kernels behind the model's inner loops. All
// matrices are row-major and tightly packed. Two implementations exist:
// portable scalar reference kernels and AVX2+FMA variants; `active()`
// selects one at startup from CPU features, overridable with the
// environment variable TABSAL_KERNELS=scalar|avx2. Both variants compute
// the same reduction tree mathematically; they may differ by rounding,
// which the equivalence tests bound.
struct Ops {
  // C(m x n) = A(m x k) * B(k x n) + beta * C, beta in {0, 1}.
  void (*matmul_nn)(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta);
  // C(m x n) = A(m x k) * B(n x k)^T + beta * C.
  void (*matmul_nt)(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta);
  // C(m x n) = A(k x m)^T * B(k x n) + beta * C.
  void (*matmul_tn)(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta);
  // y += alpha * x
  void (*axpy)(int n, double alpha, const double* x, double* y);
  double (*dot)(int n, const double* x, const double* y);
  const char* name;
};

const Ops& scalar_ops();

// AVX2+FMA kernels, or nullptr when the binary or CPU lacks support.
const Ops* avx2_ops();

bool cpu_has_avx2_fma();

// The implementation selected for this process. Stable for the process
// lifetime, so repeated runs on one machine are bit-reproducible.
const Ops& active();

}  // namespace tabsal::kernels

#endif  // TABSAL_KERNELS_HPP_
