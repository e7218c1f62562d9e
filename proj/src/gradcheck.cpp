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

#include "vjscc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace vjscc {

GradCheckResult check_gradients(
    const std::string& label, const std::function<TensorPtr(Tape*)>& forward,
    const std::vector<TensorPtr>& wrt, double tol, double fd_step,
    int max_entries_per_tensor, std::uint64_t pick_seed) {
  GradCheckResult result;
  result.label = label;

  for (const auto& t : wrt) t->zero_grad();
  Tape tape;
  TensorPtr loss = forward(&tape);
  if (!loss || loss->numel() != 1) {
    throw std::invalid_argument("check_gradients: forward must return a scalar");
  }
  tape.backward(loss);
  std::vector<std::vector<Real>> ad_grads;
  ad_grads.reserve(wrt.size());
  for (const auto& t : wrt) {
    t->ensure_grad();
    ad_grads.push_back(t->grad);
  }
  tape.reset();

  auto eval = [&forward]() {
    TensorPtr v = forward(nullptr);
    return v->data[0];
  };

  Rng pick(pick_seed);
  double max_err = 0.0;
  std::size_t checked = 0;
  for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
    Tensor& t = *wrt[ti];
    std::vector<std::size_t> entries;
    if (max_entries_per_tensor <= 0 ||
        t.numel() <= static_cast<std::size_t>(max_entries_per_tensor)) {
      entries.resize(t.numel());
      for (std::size_t i = 0; i < t.numel(); ++i) entries[i] = i;
    } else {
      std::unordered_set<std::size_t> seen;
      while (seen.size() < static_cast<std::size_t>(max_entries_per_tensor)) {
        seen.insert(pick.index(t.numel()));
      }
      entries.assign(seen.begin(), seen.end());
      std::sort(entries.begin(), entries.end());
    }
    for (std::size_t idx : entries) {
      Real saved = t.data[idx];
      t.data[idx] = saved + fd_step;
      double fplus = eval();
      t.data[idx] = saved - fd_step;
      double fminus = eval();
      t.data[idx] = saved;
      double fd = (fplus - fminus) / (2.0 * fd_step);
      double ad = ad_grads[ti][idx];
      double denom = std::max({1.0, std::abs(ad), std::abs(fd)});
      max_err = std::max(max_err, std::abs(ad - fd) / denom);
      ++checked;
    }
  }
  result.max_rel_err = max_err;
  result.entries_checked = checked;
  result.pass = max_err < tol;
  return result;
}

}  // namespace vjscc
