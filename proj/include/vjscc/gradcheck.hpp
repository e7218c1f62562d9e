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

#include <functional>
#include <string>
#include <vector>

#include "vjscc/tensor.hpp"

namespace vjscc {

struct GradCheckResult {
  std::string label;
  double max_rel_err = 0.0;
  std::size_t entries_checked = 0;
  bool pass = false;
};

// Compares reverse-mode gradients against central finite differences
// (f(x+h) - f(x-h)) / 2h. `forward` must rebuild the whole computation from
// the current tensor data each call and return a scalar; the difference
// side only ever evaluates forward(nullptr), so it is independent of every
// recorded backward rule. Per-entry relative error is
// |ad - fd| / max(1, |ad|, |fd|). Tensors larger than
// max_entries_per_tensor are checked on that many distinct sampled entries
// (0 = all entries).
GradCheckResult check_gradients(
    const std::string& label, const std::function<TensorPtr(Tape*)>& forward,
    const std::vector<TensorPtr>& wrt, double tol = 1e-4,
    double fd_step = 1e-5, int max_entries_per_tensor = 0,
    std::uint64_t pick_seed = 1);

}  // namespace vjscc
