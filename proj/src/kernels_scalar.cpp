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

// Portable reference kernels. These define the semantics the SIMD variants
// are tested against; keep them straightforward.

#include "tabsal/kernels.hpp"

namespace tabsal::kernels {
namespace {

void matmul_nn_scalar(const double* a, const double* b, double* c, int m,
                      int k, int n, double beta) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<long>(i) * n;
    if (beta == 0.0) {
      for (int j = 0; j < n; ++j) ci[j] = 0.0;
    }
    const double* ai = a + static_cast<long>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b + static_cast<long>(l) * n;
      for (int j = 0; j < n; ++j) ci[j] += ail * bl[j];
    }
  }
}

void matmul_nt_scalar(const double* a, const double* b, double* c, int m,
                      int k, int n, double beta) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<long>(j) * k;
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
      ci[j] = (beta == 0.0 ? acc : ci[j] + acc);
    }
  }
}

void matmul_tn_scalar(const double* a, const double* b, double* c, int m,
                      int k, int n, double beta) {
  if (beta == 0.0) {
    for (long i = 0; i < static_cast<long>(m) * n; ++i) c[i] = 0.0;
  }
  for (int l = 0; l < k; ++l) {
    const double* al = a + static_cast<long>(l) * m;
    const double* bl = b + static_cast<long>(l) * n;
    for (int i = 0; i < m; ++i) {
      const double ali = al[i];
      double* ci = c + static_cast<long>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += ali * bl[j];
    }
  }
}

void axpy_scalar(int n, double alpha, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(int n, const double* x, const double* y) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {matmul_nn_scalar, matmul_nt_scalar, matmul_tn_scalar,
                          axpy_scalar, dot_scalar, "scalar"};
  return ops;
}

}  // namespace tabsal::kernels
