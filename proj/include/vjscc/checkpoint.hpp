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

#include <cstdint>
#include <string>

#include "vjscc/codec.hpp"

namespace vjscc {

// A checkpoint is a directory of one binary tensor file per named
// parameter plus manifest.txt (key=value model configuration and tensor
// count).
void save_checkpoint(const std::string& dir, const Model& model);
Model load_checkpoint(const std::string& dir);

// FNV-1a 64 over file names and bytes in sorted name order; stable across
// identical runs.
std::uint64_t checkpoint_content_hash(const std::string& dir);

}  // namespace vjscc
