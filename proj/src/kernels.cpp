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

#include "vjscc/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

namespace vjscc::kernels {

namespace {

void add_scalar_impl(const double* a, const double* b, double* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_scalar_impl(const double* a, const double* b, double* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_scalar_impl(const double* x, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

void axpy_scalar_impl(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Blocked reduction order shared with the SIMD backends; see kernels.hpp.
double sum_scalar_impl(const double* x, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += x[i];
    acc1 += x[i + 1];
    acc2 += x[i + 2];
    acc3 += x[i + 3];
  }
  double s = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar_impl(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double s = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

constexpr Ops kScalarOps = {
    add_scalar_impl, mul_scalar_impl, scale_scalar_impl,
    axpy_scalar_impl, dot_scalar_impl, sum_scalar_impl,
};

}  // namespace

// Defined in kernels_avx2.cpp / kernels_neon.cpp; null when the translation
// unit was built for a different architecture.
const Ops* avx2_ops_or_null();
const Ops* neon_ops_or_null();

namespace {

Backend detect_backend() {
  if (const char* env = std::getenv("VJSCC_KERNELS")) {
    std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && avx2_ops_or_null()) return Backend::avx2;
    if (want == "neon" && neon_ops_or_null()) return Backend::neon;
    return Backend::scalar;
  }
  if (avx2_ops_or_null()) return Backend::avx2;
  if (neon_ops_or_null()) return Backend::neon;
  return Backend::scalar;
}

Backend g_backend = detect_backend();

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return avx2_ops_or_null() != nullptr;
    case Backend::neon:
      return neon_ops_or_null() != nullptr;
  }
  return false;
}

const Ops& backend_ops(Backend b) {
  switch (b) {
    case Backend::scalar:
      return kScalarOps;
    case Backend::avx2:
      if (const Ops* ops = avx2_ops_or_null()) return *ops;
      break;
    case Backend::neon:
      if (const Ops* ops = neon_ops_or_null()) return *ops;
      break;
  }
  throw std::runtime_error(std::string("kernel backend unavailable: ") +
                           backend_name(b));
}

const Ops& active() { return backend_ops(g_backend); }

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw std::runtime_error(std::string("kernel backend unavailable: ") +
                             backend_name(b));
  }
  g_backend = b;
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace vjscc::kernels
