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

#include <string>

#include "vjscc/tensor.hpp"

namespace vjscc {

// Flat binary tensor format used for checkpoints and golden files:
//   magic "MJT1", u32 rank, rank x u32 dims, float64 payload, all
//   little-endian, payload row-major.
void write_tensor(const std::string& path, const Tensor& t);
TensorPtr read_tensor(const std::string& path);

}  // namespace vjscc
