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

#include "vjscc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "vjscc/tensor_io.hpp"

namespace vjscc {

namespace {

[[noreturn]] void ppm_error(const std::string& path, const std::string& what) {
  throw std::runtime_error("ppm error in " + path + ": " + what);
}

// Reads one whitespace/comment-delimited token of a PPM header.
std::string next_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

TensorPtr read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) ppm_error(path, "cannot open");
  char magic[2];
  is.read(magic, 2);
  if (!is || magic[0] != 'P' || magic[1] != '6') ppm_error(path, "not a P6 file");
  auto parse_int = [&](const char* field) {
    std::string tok = next_token(is);
    if (tok.empty()) ppm_error(path, std::string("missing ") + field);
    for (char ch : tok) {
      if (!std::isdigit(static_cast<unsigned char>(ch))) {
        ppm_error(path, std::string("malformed ") + field + " '" + tok + "'");
      }
    }
    return std::stol(tok);
  };
  long w = parse_int("width");
  long h = parse_int("height");
  long maxval = parse_int("maxval");
  if (w < 1 || h < 1) ppm_error(path, "non-positive dimensions");
  if (maxval != 255) ppm_error(path, "unsupported maxval " + std::to_string(maxval));
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) ppm_error(path, "truncated pixel data");
  auto img = zeros({3, static_cast<int>(h), static_cast<int>(w)});
  std::size_t plane = static_cast<std::size_t>(w) * h;
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * w + x;
      for (int ch = 0; ch < 3; ++ch) {
        img->data[ch * plane + p] = raw[3 * p + ch] / 255.0;
      }
    }
  }
  return img;
}

void write_ppm(const std::string& path, const Tensor& image01) {
  if (image01.rank() != 3 || image01.dim(0) != 3) {
    throw std::invalid_argument("write_ppm: expected [3,H,W], got " +
                                shape_str(image01.shape));
  }
  int h = image01.dim(1), w = image01.dim(2);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_ppm: cannot open " + path);
  os << "P6\n" << w << " " << h << "\n255\n";
  std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int ch = 0; ch < 3; ++ch) {
      double v = std::clamp(image01.data[ch * plane + p], 0.0, 1.0);
      os.put(static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  if (!os) throw std::runtime_error("write_ppm: short write to " + path);
}

Dataset load_image_dir(const std::string& path, int min_size) {
  namespace fs = std::filesystem;
  Dataset ds;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".mjt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    TensorPtr img;
    if (f.extension() == ".ppm") {
      img = read_ppm(f.string());
    } else {
      img = read_tensor(f.string());
      if (img->rank() != 3 || img->dim(0) != 3) {
        std::cerr << "warning: skipping " << f.string()
                  << " (tensor is not [3,H,W])\n";
        continue;
      }
    }
    if (img->dim(1) < min_size || img->dim(2) < min_size) {
      std::cerr << "warning: skipping " << f.string() << " ("
                << img->dim(1) << "x" << img->dim(2) << " smaller than crop "
                << min_size << ")\n";
      continue;
    }
    ds.images.push_back(img);
    ds.ids.push_back(f.stem().string());
  }
  return ds;
}

Dataset synthetic_dataset(int count, int h, int w, std::uint64_t seed) {
  Dataset ds;
  for (int n = 0; n < count; ++n) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
    double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double gx = std::cos(theta), gy = std::sin(theta);
    double c0[3], c1[3];
    for (int ch = 0; ch < 3; ++ch) {
      c0[ch] = rng.uniform(0.05, 0.95);
      c1[ch] = rng.uniform(0.05, 0.95);
    }
    double freq = rng.uniform(1.0, 4.0);
    double phase = rng.uniform(0.0, 6.28);
    double tex_amp = rng.uniform(0.05, 0.2);
    double noise_amp = 0.03;
    auto img = zeros({3, h, w});
    std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double u = (gx * x / (w - 1.0) + gy * y / (h - 1.0) + 1.0) / 2.0;
        double tex = tex_amp * std::sin(freq * 6.28318530717958648 *
                                            (x + 2.0 * y) / w + phase);
        for (int ch = 0; ch < 3; ++ch) {
          double v = c0[ch] + (c1[ch] - c0[ch]) * u + tex +
                     noise_amp * rng.normal();
          img->data[ch * plane + static_cast<std::size_t>(y) * w + x] =
              std::clamp(v, 0.0, 1.0);
        }
      }
    }
    ds.images.push_back(img);
    ds.ids.push_back("synthetic" + std::to_string(n));
  }
  return ds;
}

namespace {

TensorPtr crop_at(const TensorPtr& image, int y0, int x0, int size) {
  int h = image->dim(1), w = image->dim(2);
  std::size_t plane = static_cast<std::size_t>(h) * w;
  auto out = zeros({3, size, size});
  std::size_t oplane = static_cast<std::size_t>(size) * size;
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < size; ++y) {
      const Real* src =
          image->data.data() + ch * plane + static_cast<std::size_t>(y0 + y) * w + x0;
      Real* dst = out->data.data() + ch * oplane + static_cast<std::size_t>(y) * size;
      std::copy(src, src + size, dst);
    }
  }
  return out;
}

}  // namespace

TensorPtr random_crop(const TensorPtr& image, int size, Rng& rng) {
  int h = image->dim(1), w = image->dim(2);
  if (h < size || w < size) {
    throw std::invalid_argument("random_crop: image " + shape_str(image->shape) +
                                " smaller than crop " + std::to_string(size));
  }
  int y0 = (h == size) ? 0 : static_cast<int>(rng.index(static_cast<std::size_t>(h - size + 1)));
  int x0 = (w == size) ? 0 : static_cast<int>(rng.index(static_cast<std::size_t>(w - size + 1)));
  return crop_at(image, y0, x0, size);
}

TensorPtr center_crop(const TensorPtr& image, int size) {
  int h = image->dim(1), w = image->dim(2);
  if (h < size || w < size) {
    throw std::invalid_argument("center_crop: image " + shape_str(image->shape) +
                                " smaller than crop " + std::to_string(size));
  }
  return crop_at(image, (h - size) / 2, (w - size) / 2, size);
}

}  // namespace vjscc
