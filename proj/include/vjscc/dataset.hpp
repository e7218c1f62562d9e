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
#include <vector>

#include "vjscc/tensor.hpp"

namespace vjscc {

struct Dataset {
  std::vector<TensorPtr> images;  // [3,H,W] in [0,1]
  std::vector<std::string> ids;
  bool empty() const { return images.empty(); }
  std::size_t size() const { return images.size(); }
};

// Binary P6 portable pixmap, maxval 255. read scales to [0,1]; write
// quantizes with round-half-up. Header errors name the offending file.
TensorPtr read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image01);

// Loads every *.ppm and *.mjt image in a directory (sorted by name).
// Images smaller than min_size are skipped with a warning on stderr.
Dataset load_image_dir(const std::string& path, int min_size);

// Procedural gradients plus sinusoidal and noise texture, deterministic in
// the seed. Values lie in [0,1].
Dataset synthetic_dataset(int count, int h, int w, std::uint64_t seed);

TensorPtr random_crop(const TensorPtr& image, int size, Rng& rng);
TensorPtr center_crop(const TensorPtr& image, int size);

}  // namespace vjscc
