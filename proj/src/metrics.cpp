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

#include "vjscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vjscc {

TensorPtr mse_loss(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) {
    throw std::invalid_argument("mse_loss: shape mismatch " +
                                shape_str(a->shape) + " vs " +
                                shape_str(b->shape));
  }
  TensorPtr diff = add(tape, b, mul_scalar(tape, a, -1.0));
  TensorPtr sq = mul(tape, diff, diff);
  return mul_scalar(tape, sum(tape, sq), 1.0 / static_cast<Real>(a->numel()));
}

double psnr_from_mse(double mse, double max_val) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double psnr_db(const Tensor& ref, const Tensor& test, double max_val) {
  if (ref.shape != test.shape) {
    throw std::invalid_argument("psnr_db: shape mismatch " +
                                shape_str(ref.shape) + " vs " +
                                shape_str(test.shape));
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.numel(); ++i) {
    double t = std::clamp(test.data[i], 0.0, max_val);
    double d = ref.data[i] - t;
    mse += d * d;
  }
  mse /= static_cast<double>(ref.numel());
  return psnr_from_mse(mse, max_val);
}

double image_psnr_db(const Tensor& ref01, const Tensor& test01) {
  if (ref01.shape != test01.shape) {
    throw std::invalid_argument("image_psnr_db: shape mismatch " +
                                shape_str(ref01.shape) + " vs " +
                                shape_str(test01.shape));
  }
  double mse = 0.0;
  for (std::size_t i = 0; i < ref01.numel(); ++i) {
    double t = std::clamp(test01.data[i], 0.0, 1.0) * 255.0;
    double d = ref01.data[i] * 255.0 - t;
    mse += d * d;
  }
  mse /= static_cast<double>(ref01.numel());
  return psnr_from_mse(mse, 255.0);
}

}  // namespace vjscc
