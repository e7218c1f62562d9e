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

#include <cmath>

#include "doctest.h"
#include "testutil.hpp"
#include "vjscc/csi.hpp"
#include "vjscc/gradcheck.hpp"

using namespace vjscc;
using testutil::T;
using testutil::approx_equal;
using testutil::weighted_sum;

TEST_CASE("sinusoidal encoding at zero and the first pair at 5 dB") {
  auto pe0 = sinusoidal_encode(0.0, 8);
  for (int i = 0; i < 8; i += 2) {
    CHECK(pe0->data[i] == 0.0);
    CHECK(pe0->data[i + 1] == 1.0);
  }
  auto pe5 = sinusoidal_encode(5.0, 16);
  CHECK(pe5->data[0] == doctest::Approx(-0.958924).epsilon(1e-6));
  CHECK(pe5->data[1] == doctest::Approx(0.283662).epsilon(1e-6));
}

TEST_CASE("sinusoidal encoding is injective over the 1..20 dB grid") {
  const int d_pe = 16;
  std::vector<TensorPtr> codes;
  for (int snr = 1; snr <= 20; ++snr) {
    codes.push_back(sinusoidal_encode(snr, d_pe));
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      double diff = 0.0;
      for (int k = 0; k < d_pe; ++k) {
        diff += std::abs(codes[i]->data[k] - codes[j]->data[k]);
      }
      CHECK(diff > 1e-6);
    }
  }
}

TEST_CASE("sinusoidal encoding rejects odd widths") {
  CHECK_THROWS_AS(sinusoidal_encode(3.0, 7), std::invalid_argument);
}

TEST_CASE("encode_csi zero weights and bit-exact determinism") {
  Rng rng(1);
  auto p = init_csi_encoder(8, 8, rng);
  p->w1 = zeros({8, 8}, true);
  p->b1 = zeros({8}, true);
  p->w2 = zeros({8, 8}, true);
  p->b2 = zeros({8}, true);
  auto u = encode_csi(nullptr, 12.0, *p);
  CHECK(approx_equal(*u, std::vector<Real>(8, 0.0)));

  Rng rng2(7);
  auto q = init_csi_encoder(8, 8, rng2);
  auto u1 = encode_csi(nullptr, 10.0, *q);
  auto u2 = encode_csi(nullptr, 10.0, *q);
  CHECK(u1->data == u2->data);
}

TEST_CASE("distinct SNRs encode to distinct vectors after random init") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto p = init_csi_encoder(8, 8, rng);
    auto a = encode_csi(nullptr, 5.0, *p);
    auto b = encode_csi(nullptr, 15.0, *p);
    double l2 = 0.0;
    for (int i = 0; i < 8; ++i) {
      double d = a->data[i] - b->data[i];
      l2 += d * d;
    }
    CHECK(l2 > 0.0);
  }
}

TEST_CASE("embed_csi additive identity and constant per-channel shift") {
  Rng rng(2);
  auto patches = randn({2, 3, 3}, rng, 1.0);

  CsiEmbedParams zero;
  zero.w = zeros({2, 4}, true);
  zero.b = zeros({2}, true);
  auto u = randn({4}, rng, 1.0);
  auto out = embed_csi(nullptr, u, zero, patches);
  CHECK(out->data == patches->data);

  // Bias [1,-1] with zero weight shifts channel planes by +1 / -1.
  CsiEmbedParams shift;
  shift.w = zeros({2, 4}, true);
  shift.b = T({2}, {1.0, -1.0}, true);
  auto out2 = embed_csi(nullptr, u, shift, patches);
  for (int i = 0; i < 9; ++i) {
    CHECK(out2->data[i] == doctest::Approx(patches->data[i] + 1.0));
    CHECK(out2->data[9 + i] == doctest::Approx(patches->data[9 + i] - 1.0));
  }
}

TEST_CASE("gradients flow to both the CSI path and the patches") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto p = init_csi_encoder(6, 6, rng);
    CsiEmbedParams embed = init_csi_embed(6, 3, rng);
    auto patches = randn({3, 2, 2}, rng, 1.0, true);
    auto res = check_gradients(
        "csi_path",
        [&](Tape* t) {
          TensorPtr u = encode_csi(t, 9.0, *p);
          return weighted_sum(t, embed_csi(t, u, embed, patches), seed);
        },
        {p->w1, p->b1, p->w2, p->b2, embed.w, embed.b, patches}, 1e-4, 1e-5);
    INFO("seed=", seed, " err=", res.max_rel_err);
    CHECK(res.pass);
  }
}
