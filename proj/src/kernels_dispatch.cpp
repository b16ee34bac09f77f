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

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

#include "tabsal/kernels.hpp"

namespace tabsal::kernels {

// Defined in kernels_avx2.cpp; nullptr when the build lacks AVX2 support.
const Ops* avx2_ops_impl();

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* avx2_ops() {
  if (!cpu_has_avx2_fma()) return nullptr;
  return avx2_ops_impl();
}

namespace {

const Ops* select() {
  const char* want = std::getenv("TABSAL_KERNELS");
  if (want != nullptr) {
    if (std::strcmp(want, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(want, "avx2") == 0) {
      if (const Ops* ops = avx2_ops()) return ops;
      std::fprintf(stderr,
                   "tabsal: TABSAL_KERNELS=avx2 requested but unsupported "
                   "here; using scalar kernels\n");
      return &scalar_ops();
    }
    std::fprintf(stderr, "tabsal: unknown TABSAL_KERNELS value '%s'; using "
                         "auto selection\n", want);
  }
  if (const Ops* ops = avx2_ops()) return ops;
  return &scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops* selected = select();
  return *selected;
}

}  // namespace tabsal::kernels
