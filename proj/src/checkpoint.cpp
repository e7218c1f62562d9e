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

#include "vjscc/checkpoint.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "vjscc/config.hpp"
#include "vjscc/tensor_io.hpp"

namespace vjscc {

namespace fs = std::filesystem;

void save_checkpoint(const std::string& dir, const Model& model) {
  fs::create_directories(dir);
  auto params = model.named_parameters();
  for (const auto& [name, t] : params) {
    write_tensor((fs::path(dir) / (name + ".mjt")).string(), *t);
  }
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) {
    throw std::runtime_error("save_checkpoint: cannot write manifest in " + dir);
  }
  manifest << render_model_config(model.config);
  manifest << "tensors = " << params.size() << "\n";
}

Model load_checkpoint(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) {
    throw std::runtime_error("load_checkpoint: missing manifest in " + dir);
  }
  std::string text((std::istreambuf_iterator<char>(manifest)),
                   std::istreambuf_iterator<char>());
  ModelConfig cfg = parse_model_config_text(text);
  Model model = Model::init(cfg, /*seed=*/0);
  for (auto& [name, t] : model.named_parameters()) {
    fs::path f = fs::path(dir) / (name + ".mjt");
    TensorPtr loaded = read_tensor(f.string());
    if (loaded->shape != t->shape) {
      throw std::runtime_error("load_checkpoint: tensor " + name +
                               " has shape " + shape_str(loaded->shape) +
                               ", expected " + shape_str(t->shape));
    }
    t->data = loaded->data;
  }
  return model;
}

std::uint64_t checkpoint_content_hash(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& f : files) {
    std::string name = f.filename().string();
    feed(name.data(), name.size());
    std::ifstream is(f, std::ios::binary);
    char buf[4096];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
      feed(buf, static_cast<std::size_t>(is.gcount()));
      if (!is) break;
    }
  }
  return h;
}

}  // namespace vjscc
