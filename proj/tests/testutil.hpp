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

#include <cmath>
#include <vector>

#include "vjscc/tensor.hpp"

namespace vjscc::testutil {

inline TensorPtr T(Shape shape, std::vector<Real> data, bool rg = false) {
  return tensor(std::move(shape), std::move(data), rg);
}

inline bool approx_equal(const Tensor& a, const std::vector<Real>& expect,
                         double tol = 1e-12) {
  if (a.numel() != expect.size()) return false;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (std::abs(a.data[i] - expect[i]) > tol) return false;
  }
  return true;
}

inline double max_abs_diff(const std::vector<Real>& a,
                           const std::vector<Real>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

// Scalar loss for gradient checks: a fixed random weighting of the output,
// so permuted or mis-scaled entries cannot cancel.
inline TensorPtr weighted_sum(Tape* tape, const TensorPtr& out,
                              std::uint64_t seed) {
  Rng rng(seed);
  auto w = randn(out->shape, rng, 1.0);
  return sum(tape, mul(tape, out, w));
}

}  // namespace vjscc::testutil
