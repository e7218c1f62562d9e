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

#include <vector>

#include "doctest.h"
#include "vjscc/kernels.hpp"
#include "vjscc/rng.hpp"

using namespace vjscc;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, 2.0);
  return v;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(kernels::backend_available(kernels::Backend::scalar));
}

TEST_CASE("simd backends match the scalar reference bitwise") {
  const kernels::Ops& ref = kernels::backend_ops(kernels::Backend::scalar);
  for (auto backend : {kernels::Backend::avx2, kernels::Backend::neon}) {
    if (!kernels::backend_available(backend)) continue;
    const kernels::Ops& simd = kernels::backend_ops(backend);
    // Lengths straddle the vector width and exercise the remainder loops.
    for (std::size_t n : {std::size_t{1}, std::size_t{3}, std::size_t{4},
                          std::size_t{7}, std::size_t{8}, std::size_t{64},
                          std::size_t{1023}}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto a = random_vec(n, seed);
        auto b = random_vec(n, seed + 100);
        std::vector<double> out_ref(n), out_simd(n);

        ref.add(a.data(), b.data(), out_ref.data(), n);
        simd.add(a.data(), b.data(), out_simd.data(), n);
        CHECK(out_ref == out_simd);

        ref.mul(a.data(), b.data(), out_ref.data(), n);
        simd.mul(a.data(), b.data(), out_simd.data(), n);
        CHECK(out_ref == out_simd);

        ref.scale(a.data(), 1.37, out_ref.data(), n);
        simd.scale(a.data(), 1.37, out_simd.data(), n);
        CHECK(out_ref == out_simd);

        auto y_ref = b, y_simd = b;
        ref.axpy(-0.73, a.data(), y_ref.data(), n);
        simd.axpy(-0.73, a.data(), y_simd.data(), n);
        CHECK(y_ref == y_simd);

        CHECK(ref.sum(a.data(), n) == simd.sum(a.data(), n));
        CHECK(ref.dot(a.data(), b.data(), n) == simd.dot(a.data(), b.data(), n));
      }
    }
  }
}

TEST_CASE("kernel results are correct against plain formulas") {
  const kernels::Ops& ops = kernels::active();
  std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<double> b{0.5, -1.0, 2.0, 0.0, 1.0};
  std::vector<double> out(5);
  ops.add(a.data(), b.data(), out.data(), 5);
  CHECK(out == std::vector<double>{1.5, 1.0, 5.0, 4.0, 6.0});
  ops.mul(a.data(), b.data(), out.data(), 5);
  CHECK(out == std::vector<double>{0.5, -2.0, 6.0, 0.0, 5.0});
  CHECK(ops.sum(a.data(), 5) == doctest::Approx(15.0));
  CHECK(ops.dot(a.data(), b.data(), 5) == doctest::Approx(0.5 - 2 + 6 + 0 + 5));
  ops.scale(a.data(), 2.0, out.data(), 5);
  CHECK(out == std::vector<double>{2.0, 4.0, 6.0, 8.0, 10.0});
  auto y = b;
  ops.axpy(3.0, a.data(), y.data(), 5);
  CHECK(y == std::vector<double>{3.5, 5.0, 11.0, 12.0, 16.0});
}
