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

// AVX2+FMA variants of the reference kernels in kernels_scalar.cpp. This
// translation unit is compiled with -mavx2 -mfma on x86-64 and is only
// reachable through the runtime dispatch in kernels_dispatch.cpp.

#include "tabsal/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace tabsal::kernels {
namespace {

inline __m256i tail_mask(int r) {
  // First r lanes active, r in [1, 3].
  alignas(32) static const long long bits[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(bits + (4 - r)));
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

// C rows stay in registers across the whole k loop; B is streamed row-wise.
void matmul_nn_avx2(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    int j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d c0, c1, c2, c3;
      if (beta == 0.0) {
        c0 = c1 = c2 = c3 = _mm256_setzero_pd();
      } else {
        c0 = _mm256_loadu_pd(ci + j);
        c1 = _mm256_loadu_pd(ci + j + 4);
        c2 = _mm256_loadu_pd(ci + j + 8);
        c3 = _mm256_loadu_pd(ci + j + 12);
      }
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(ai[l]);
        const double* bl = b + static_cast<long>(l) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 12), c3);
      }
      _mm256_storeu_pd(ci + j, c0);
      _mm256_storeu_pd(ci + j + 4, c1);
      _mm256_storeu_pd(ci + j + 8, c2);
      _mm256_storeu_pd(ci + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = (beta == 0.0) ? _mm256_setzero_pd() : _mm256_loadu_pd(ci + j);
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(ai[l]);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<long>(l) * n + j), c0);
      }
      _mm256_storeu_pd(ci + j, c0);
    }
    if (j < n) {
      const __m256i mask = tail_mask(n - j);
      __m256d c0 = (beta == 0.0) ? _mm256_setzero_pd()
                                 : _mm256_maskload_pd(ci + j, mask);
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(ai[l]);
        const __m256d bv =
            _mm256_maskload_pd(b + static_cast<long>(l) * n + j, mask);
        c0 = _mm256_fmadd_pd(av, bv, c0);
      }
      _mm256_maskstore_pd(ci + j, mask, c0);
    }
  }
}

void matmul_tn_avx2(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta) {
  int j = 0;
  for (; j + 16 <= n; j += 16) {
    for (int i = 0; i < m; ++i) {
      double* ci = c + static_cast<long>(i) * n + j;
      __m256d c0, c1, c2, c3;
      if (beta == 0.0) {
        c0 = c1 = c2 = c3 = _mm256_setzero_pd();
      } else {
        c0 = _mm256_loadu_pd(ci);
        c1 = _mm256_loadu_pd(ci + 4);
        c2 = _mm256_loadu_pd(ci + 8);
        c3 = _mm256_loadu_pd(ci + 12);
      }
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(a[static_cast<long>(l) * m + i]);
        const double* bl = b + static_cast<long>(l) * n + j;
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl), c0);
        c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 4), c1);
        c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 8), c2);
        c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bl + 12), c3);
      }
      _mm256_storeu_pd(ci, c0);
      _mm256_storeu_pd(ci + 4, c1);
      _mm256_storeu_pd(ci + 8, c2);
      _mm256_storeu_pd(ci + 12, c3);
    }
  }
  for (; j + 4 <= n; j += 4) {
    for (int i = 0; i < m; ++i) {
      double* ci = c + static_cast<long>(i) * n + j;
      __m256d c0 = (beta == 0.0) ? _mm256_setzero_pd() : _mm256_loadu_pd(ci);
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(a[static_cast<long>(l) * m + i]);
        c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + static_cast<long>(l) * n + j), c0);
      }
      _mm256_storeu_pd(ci, c0);
    }
  }
  if (j < n) {
    const __m256i mask = tail_mask(n - j);
    for (int i = 0; i < m; ++i) {
      double* ci = c + static_cast<long>(i) * n + j;
      __m256d c0 = (beta == 0.0) ? _mm256_setzero_pd()
                                 : _mm256_maskload_pd(ci, mask);
      for (int l = 0; l < k; ++l) {
        const __m256d av = _mm256_set1_pd(a[static_cast<long>(l) * m + i]);
        const __m256d bv =
            _mm256_maskload_pd(b + static_cast<long>(l) * n + j, mask);
        c0 = _mm256_fmadd_pd(av, bv, c0);
      }
      _mm256_maskstore_pd(ci, mask, c0);
    }
  }
}

void matmul_nt_avx2(const double* a, const double* b, double* c, int m, int k,
                    int n, double beta) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<long>(i) * k;
    double* ci = c + static_cast<long>(i) * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + static_cast<long>(j) * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d a0 = _mm256_setzero_pd();
      __m256d a1 = _mm256_setzero_pd();
      __m256d a2 = _mm256_setzero_pd();
      __m256d a3 = _mm256_setzero_pd();
      int l = 0;
      for (; l + 4 <= k; l += 4) {
        const __m256d av = _mm256_loadu_pd(ai + l);
        a0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + l), a0);
        a1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + l), a1);
        a2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + l), a2);
        a3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + l), a3);
      }
      double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
      for (; l < k; ++l) {
        s0 += ai[l] * b0[l];
        s1 += ai[l] * b1[l];
        s2 += ai[l] * b2[l];
        s3 += ai[l] * b3[l];
      }
      if (beta == 0.0) {
        ci[j] = s0;
        ci[j + 1] = s1;
        ci[j + 2] = s2;
        ci[j + 3] = s3;
      } else {
        ci[j] += s0;
        ci[j + 1] += s1;
        ci[j + 2] += s2;
        ci[j + 3] += s3;
      }
    }
    for (; j < n; ++j) {
      const double* bj = b + static_cast<long>(j) * k;
      __m256d acc = _mm256_setzero_pd();
      int l = 0;
      for (; l + 4 <= k; l += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(ai + l), _mm256_loadu_pd(bj + l), acc);
      double s = hsum(acc);
      for (; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = (beta == 0.0 ? s : ci[j] + s);
    }
  }
}

void axpy_avx2(int n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
    _mm256_storeu_pd(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(int n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

const Ops* avx2_ops_impl() {
  static const Ops ops = {matmul_nn_avx2, matmul_nt_avx2, matmul_tn_avx2,
                          axpy_avx2, dot_avx2, "avx2"};
  return &ops;
}

}  // namespace tabsal::kernels

#else

namespace tabsal::kernels {
const Ops* avx2_ops_impl() { return nullptr; }
}  // namespace tabsal::kernels

#endif
