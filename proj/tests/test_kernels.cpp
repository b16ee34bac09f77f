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

#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "tabsal/kernels.hpp"
#include "tabsal/rng.hpp"

namespace {

using tabsal::Rng;
namespace kernels = tabsal::kernels;

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// The SIMD variants reassociate reductions, so equality is up to roundoff.
constexpr double kTol = 1e-11;

TEST_SUITE("kernels") {

TEST_CASE("scalar matmul_nn matches a naive triple loop") {
  Rng rng(1);
  const int m = 5, k = 7, n = 9;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<double> c(m * n, 0.0), expect(m * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < k; ++l) expect[i * n + j] += a[i * k + l] * b[l * n + j];
  kernels::scalar_ops().matmul_nn(a.data(), b.data(), c.data(), m, k, n, 0.0);
  CHECK(max_abs_diff(c, expect) < 1e-14);
}

TEST_CASE("scalar matmul_nt and matmul_tn agree with transposed nn") {
  Rng rng(2);
  const int m = 6, k = 5, n = 4;
  auto a = random_vec(m * k, rng);
  auto bt = random_vec(n * k, rng);  // B^T stored as n x k
  std::vector<double> b(k * n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < k; ++l) b[l * n + j] = bt[j * k + l];
  std::vector<double> via_nn(m * n, 0.0), via_nt(m * n, 0.0);
  kernels::scalar_ops().matmul_nn(a.data(), b.data(), via_nn.data(), m, k, n, 0.0);
  kernels::scalar_ops().matmul_nt(a.data(), bt.data(), via_nt.data(), m, k, n, 0.0);
  CHECK(max_abs_diff(via_nn, via_nt) < 1e-12);

  // A^T path: C = (A^T)^T * B with A stored k x m.
  std::vector<double> at(k * m);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < k; ++l) at[l * m + i] = a[i * k + l];
  std::vector<double> via_tn(m * n, 0.0);
  kernels::scalar_ops().matmul_tn(at.data(), b.data(), via_tn.data(), m, k, n, 0.0);
  CHECK(max_abs_diff(via_nn, via_tn) < 1e-12);
}

TEST_CASE("beta accumulates instead of overwriting") {
  Rng rng(3);
  const int m = 3, k = 4, n = 5;
  auto a = random_vec(m * k, rng);
  auto b = random_vec(k * n, rng);
  std::vector<double> c0(m * n, 1.0), c1(m * n, 1.0);
  kernels::scalar_ops().matmul_nn(a.data(), b.data(), c0.data(), m, k, n, 0.0);
  kernels::scalar_ops().matmul_nn(a.data(), b.data(), c1.data(), m, k, n, 1.0);
  for (int i = 0; i < m * n; ++i) CHECK(c1[i] == doctest::Approx(c0[i] + 1.0));
}

TEST_CASE("avx2 variants match scalar on random shapes") {
  const kernels::Ops* simd = kernels::avx2_ops();
  if (simd == nullptr) return;  // host without AVX2+FMA: nothing to compare
  Rng rng(4);
  // Deliberately awkward shapes exercise the 16/4/masked tail paths.
  const int shapes[][3] = {{1, 1, 1},    {2, 3, 5},     {7, 64, 33},
                           {16, 17, 16}, {5, 128, 130}, {40, 64, 301},
                           {3, 5, 19},   {12, 100, 4}};
  for (const auto& s : shapes) {
    const int m = s[0], k = s[1], n = s[2];
    auto a = random_vec(m * k, rng);
    auto b_nn = random_vec(k * n, rng);
    auto b_nt = random_vec(n * k, rng);
    auto a_tn = random_vec(k * m, rng);
    auto seed_c = random_vec(m * n, rng);

    for (double beta : {0.0, 1.0}) {
      std::vector<double> c_ref = seed_c, c_simd = seed_c;
      kernels::scalar_ops().matmul_nn(a.data(), b_nn.data(), c_ref.data(), m, k, n, beta);
      simd->matmul_nn(a.data(), b_nn.data(), c_simd.data(), m, k, n, beta);
      CHECK_MESSAGE(max_abs_diff(c_ref, c_simd) < kTol,
                    "nn " << m << "x" << k << "x" << n);

      c_ref = seed_c, c_simd = seed_c;
      kernels::scalar_ops().matmul_nt(a.data(), b_nt.data(), c_ref.data(), m, k, n, beta);
      simd->matmul_nt(a.data(), b_nt.data(), c_simd.data(), m, k, n, beta);
      CHECK_MESSAGE(max_abs_diff(c_ref, c_simd) < kTol,
                    "nt " << m << "x" << k << "x" << n);

      c_ref = seed_c, c_simd = seed_c;
      kernels::scalar_ops().matmul_tn(a_tn.data(), b_nn.data(), c_ref.data(), m, k, n, beta);
      simd->matmul_tn(a_tn.data(), b_nn.data(), c_simd.data(), m, k, n, beta);
      CHECK_MESSAGE(max_abs_diff(c_ref, c_simd) < kTol,
                    "tn " << m << "x" << k << "x" << n);
    }
  }
}

TEST_CASE("avx2 axpy and dot match scalar") {
  const kernels::Ops* simd = kernels::avx2_ops();
  if (simd == nullptr) return;
  Rng rng(5);
  for (int n : {1, 3, 4, 7, 64, 129}) {
    auto x = random_vec(n, rng);
    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    kernels::scalar_ops().axpy(n, 0.37, x.data(), y1.data());
    simd->axpy(n, 0.37, x.data(), y2.data());
    CHECK(max_abs_diff(y1, y2) < kTol);
    double d1 = kernels::scalar_ops().dot(n, x.data(), y1.data());
    double d2 = simd->dot(n, x.data(), y2.data());
    CHECK(std::fabs(d1 - d2) < kTol * std::max(1.0, std::fabs(d1)));
  }
}

TEST_CASE("active kernel selection is a registered implementation") {
  const std::string name = kernels::active().name;
  CHECK((name == "scalar" || name == "avx2"));
  if (!kernels::cpu_has_avx2_fma()) CHECK(name == "scalar");
}

}  // TEST_SUITE

}  // namespace
