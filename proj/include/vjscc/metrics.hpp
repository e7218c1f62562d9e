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

#include "vjscc/tensor.hpp"

namespace vjscc {

// Mean squared error over all elements; gradient d/db = 2(b-a)/n.
TensorPtr mse_loss(Tape* tape, const TensorPtr& a, const TensorPtr& b);

// 10*log10(max_val^2 / MSE); `test` is clamped to [0, max_val] before
// scoring, identical inputs report +infinity.
double psnr_db(const Tensor& ref, const Tensor& test, double max_val);

// PSNR of [0,1]-scaled images on the continuous 8-bit range (x255, no
// rounding).
double image_psnr_db(const Tensor& ref01, const Tensor& test01);

double psnr_from_mse(double mse, double max_val);

}  // namespace vjscc
