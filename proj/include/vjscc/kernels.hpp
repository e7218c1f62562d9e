// Copyright 2026 The vssm-jscc Authors
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

#include <cstddef>

namespace vjscc::kernels {

// Vectorizable inner loops of the tensor engine. Every backend must produce
// bit-identical results to the scalar reference:
//   - add/mul/scale/axpy are lane-independent, so any vector width matches
//     the scalar rounding exactly (no FMA contraction is permitted).
//   - sum/dot follow a fixed blocked reduction order: four striped partial
//     accumulators acc[l] over x[4i+l], combined as (acc0+acc1)+(acc2+acc3),
//     with the remainder appended sequentially. The scalar reference
//     implements this same order, so SIMD variants match it bitwise.
struct Ops {
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // out = s * x
  void (*scale)(const double* x, double s, double* out, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
};

enum class Backend { scalar, avx2, neon };

// Active backend: picked once per process from CPU features, overridable
// with the VJSCC_KERNELS environment variable (scalar|avx2|neon) or
// set_backend(). One process sticks to one backend, which keeps emitted
// artifacts reproducible run-to-run on the same host.
const Ops& active();
Backend active_backend();
void set_backend(Backend b);  // throws if the backend is unavailable
bool backend_available(Backend b);
const Ops& backend_ops(Backend b);  // throws if unavailable
const char* backend_name(Backend b);

}  // namespace vjscc::kernels
