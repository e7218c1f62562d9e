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
#include "vjscc/count.hpp"
#include "vjscc/csi.hpp"
#include "vjscc/gradcheck.hpp"
#include "vjscc/vs6.hpp"

using namespace vjscc;
using testutil::T;
using testutil::approx_equal;
using testutil::weighted_sum;

namespace {

// Independent oracle: y_t = sum_{k<=t} C Abar^{t-k} Bbar v_k + Dmat v_t,
// with matrix powers formed by fresh repeated multiplication.
std::vector<Real> unrolled_scan_oracle(const std::vector<Real>& v,
                                       const std::vector<Real>& abar,
                                       const std::vector<Real>& bbar,
                                       const std::vector<Real>& c, Real dmat,
                                       int n) {
  int dlen = static_cast<int>(v.size());
  auto matpow = [&](int p) {
    std::vector<Real> m(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) m[i * n + i] = 1.0;
    for (int q = 0; q < p; ++q) {
      std::vector<Real> next(static_cast<std::size_t>(n) * n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            next[i * n + j] += m[i * n + l] * abar[l * n + j];
      m = next;
    }
    return m;
  };
  std::vector<Real> y(v.size(), 0.0);
  for (int t = 0; t < dlen; ++t) {
    Real acc = dmat * v[t];
    for (int k = 0; k <= t; ++k) {
      std::vector<Real> p = matpow(t - k);
      // C * P * Bbar
      Real term = 0.0;
      for (int i = 0; i < n; ++i) {
        Real pb = 0.0;
        for (int j = 0; j < n; ++j) pb += p[i * n + j] * bbar[j];
        term += c[i] * pb;
      }
      acc += term * v[k];
    }
    y[t] = acc;
  }
  return y;
}

std::vector<TensorPtr> block_param_list(VssmBlockParams& bp) {
  std::vector<TensorPtr> out = {bp.ln_gamma, bp.ln_beta, bp.in_w, bp.in_b,
                                bp.dw_w, bp.dw_b, bp.gate_w, bp.gate_b,
                                bp.out_w, bp.out_b};
  for (auto& v : bp.vs6) {
    for (auto& d : v.dir) {
      out.insert(out.end(), {d.G, d.delta, d.H1, d.H2, d.H3, d.A, d.Dmat});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("flatten_four_directions on the 2x2 worked example") {
  auto z = T({2, 2}, {1, 2, 3, 4});
  auto vs = flatten_four_directions(nullptr, z);
  CHECK(approx_equal(*vs[0], {1, 3, 2, 4}));
  CHECK(approx_equal(*vs[1], {1, 2, 3, 4}));
  CHECK(approx_equal(*vs[2], {4, 2, 3, 1}));
  CHECK(approx_equal(*vs[3], {4, 3, 2, 1}));
}

TEST_CASE("flatten_four_directions reversal identities and 1x1 patch") {
  Rng rng(3);
  auto z = randn({3, 5}, rng, 1.0);
  auto vs = flatten_four_directions(nullptr, z);
  CHECK(reverse(nullptr, vs[2])->data == vs[0]->data);
  CHECK(reverse(nullptr, vs[3])->data == vs[1]->data);

  auto one = T({1, 1}, {2.5});
  auto vs1 = flatten_four_directions(nullptr, one);
  for (const auto& v : vs1) CHECK(approx_equal(*v, {2.5}));
}

TEST_CASE("project_parameters worked examples") {
  // Zero input: Delta = delta, B = 0, C = 0.
  Rng rng(4);
  Vs6Direction dir;
  dir.G = randn({1, 2}, rng, 1.0);
  dir.delta = randn({2, 2}, rng, 1.0);
  dir.H1 = randn({2, 3}, rng, 1.0);
  dir.H2 = randn({2, 3}, rng, 1.0);
  dir.H3 = randn({2, 3}, rng, 1.0);
  auto proj = project_parameters(nullptr, zeros({3}), dir);
  CHECK(proj.Delta->data == dir.delta->data);
  CHECK(approx_equal(*proj.B, {0, 0}));
  CHECK(approx_equal(*proj.C, {0, 0}));

  // N=1, D=2: Delta = (1*1 + 1*2)*2 + 0.5 = 6.5.
  Vs6Direction d1;
  d1.G = T({1, 1}, {2.0});
  d1.delta = T({1, 1}, {0.5});
  d1.H1 = T({1, 2}, {1.0, 1.0});
  d1.H2 = T({1, 2}, {0.0, 0.0});
  d1.H3 = T({1, 2}, {0.0, 0.0});
  auto p1 = project_parameters(nullptr, T({2}, {1.0, 2.0}), d1);
  CHECK(p1.Delta->data[0] == doctest::Approx(6.5));

  // Basis vector picks out a column of H2.
  Vs6Direction d2 = dir;
  auto e1 = T({3}, {0.0, 1.0, 0.0});
  auto p2 = project_parameters(nullptr, e1, d2);
  CHECK(p2.B->data[0] == doctest::Approx(dir.H2->data[1]));
  CHECK(p2.B->data[1] == doctest::Approx(dir.H2->data[4]));
}

TEST_CASE("discretize_taylor scalar closed form and zero cases") {
  auto delta = T({1, 1}, {0.1});
  auto a = T({1, 1}, {-1.0});
  auto b = T({1, 1}, {1.0});
  auto disc = discretize_taylor(nullptr, delta, a, b);
  CHECK(disc.Abar->data[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));
  CHECK(disc.Bbar->data[0] == doctest::Approx(0.1).epsilon(1e-12));

  // Delta = 0: elementwise exp of zeros is the all-ones matrix.
  auto z2 = zeros({2, 2});
  Rng rng(5);
  auto a2 = randn({2, 2}, rng, 1.0);
  auto b2 = randn({2, 1}, rng, 1.0);
  auto disc2 = discretize_taylor(nullptr, z2, a2, b2);
  CHECK(approx_equal(*disc2.Abar, {1, 1, 1, 1}));
  CHECK(approx_equal(*disc2.Bbar, {0, 0}));

  // A = 0 gives the same all-ones Abar.
  auto d3 = randn({2, 2}, rng, 1.0);
  auto disc3 = discretize_taylor(nullptr, d3, zeros({2, 2}), b2);
  CHECK(approx_equal(*disc3.Abar, {1, 1, 1, 1}));
}

TEST_CASE("exact zero-order hold: scalar value, order of accuracy, limits") {
  auto a = T({1, 1}, {-1.0});
  auto b = T({1, 1}, {1.0});
  auto zoh01 = discretize_zoh_exact(T({1, 1}, {0.1}), a, b);
  CHECK(zoh01.Bbar->data[0] == doctest::Approx(0.0951626).epsilon(1e-6));
  CHECK(zoh01.Abar->data[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-12));

  auto gap = [&](double dt) {
    auto delta = T({1, 1}, {dt});
    auto taylor = discretize_taylor(nullptr, delta, a, b);
    auto exact = discretize_zoh_exact(delta, a, b);
    return std::abs(taylor.Bbar->data[0] - exact.Bbar->data[0]);
  };
  CHECK(gap(0.1) == doctest::Approx(0.0048374).epsilon(1e-4));
  double r1 = gap(0.2) / gap(0.1);
  double r2 = gap(0.1) / gap(0.05);
  CHECK(r1 > 3.5);
  CHECK(r1 < 4.5);
  CHECK(r2 > 3.5);
  CHECK(r2 < 4.5);

  CHECK(gap(1e-8) < 1e-15);  // both rules coincide in the small-step limit

  CHECK_THROWS_AS(discretize_zoh_exact(zeros({1, 1}), a, b),
                  std::runtime_error);
}

TEST_CASE("selective_scan worked examples") {
  auto y1 = selective_scan(nullptr, T({2}, {5, 7}), T({1, 1}, {0.0}),
                           T({1, 1}, {1.0}), T({1, 1}, {1.0}),
                           T({1, 1}, {0.0}));
  CHECK(approx_equal(*y1, {5, 7}));

  auto y2 = selective_scan(nullptr, T({3}, {1, 1, 1}), T({1, 1}, {1.0}),
                           T({1, 1}, {1.0}), T({1, 1}, {1.0}),
                           T({1, 1}, {0.0}));
  CHECK(approx_equal(*y2, {1, 2, 3}));
}

TEST_CASE("selective_scan matches the unrolled matrix-power oracle") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed);
    int n = 1 + static_cast<int>(rng.index(4));
    int dlen = 2 + static_cast<int>(rng.index(15));
    auto v = randn({dlen}, rng, 1.0);
    auto abar = randn({n, n}, rng, 0.6);
    auto bbar = randn({n, 1}, rng, 1.0);
    auto c = randn({1, n}, rng, 1.0);
    auto dmat = randn({1, 1}, rng, 1.0);
    auto y = selective_scan(nullptr, v, abar, bbar, c, dmat);
    auto oracle = unrolled_scan_oracle(v->data, abar->data, bbar->data,
                                       c->data, dmat->data[0], n);
    CHECK(testutil::max_abs_diff(y->data, oracle) < 1e-10);
    ++checked;
  }
  CHECK(checked == 30);
}

TEST_CASE("selective_scan gradients pass finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto v = randn({6}, rng, 1.0, true);
    auto abar = randn({3, 3}, rng, 0.4, true);
    auto bbar = randn({3, 1}, rng, 1.0, true);
    auto c = randn({1, 3}, rng, 1.0, true);
    auto dmat = randn({1, 1}, rng, 1.0, true);
    auto res = check_gradients(
        "selective_scan",
        [&](Tape* t) {
          return weighted_sum(
              t, selective_scan(t, v, abar, bbar, c, dmat), seed);
        },
        {v, abar, bbar, c, dmat}, 1e-4, 1e-5);
    INFO("seed=", seed, " err=", res.max_rel_err);
    CHECK(res.pass);
  }
}

TEST_CASE("merge_directions zero, identity and single-term cases") {
  auto zero22 = zeros({2, 2});
  auto merged = merge_directions(nullptr, zero22, zero22, zero22, zero22);
  CHECK(approx_equal(*merged, {0, 0, 0, 0}));

  auto y1 = T({2, 2}, {1, 0, 0, 0});
  auto m2 = merge_directions(nullptr, y1, zero22, zero22, zero22);
  CHECK(approx_equal(*m2, {1, 0, 0, 0}));
}

TEST_CASE("identity per-direction scan makes vs6 return exactly 4z") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed);
    int h = 1 + static_cast<int>(rng.index(8));
    int w = 1 + static_cast<int>(rng.index(8));
    Vs6Params p = init_vs6_params(3, h * w, rng);
    for (auto& d : p.dir) {
      // C = H3 v = 0 and Dmat = 1 make each directional scan the identity.
      d.H3 = zeros({3, h * w}, true);
      d.Dmat = T({1, 1}, {1.0}, false);
    }
    auto z = randn({h, w}, rng, 1.0);
    auto y = vs6_forward(nullptr, z, p);
    REQUIRE(y->shape == z->shape);
    for (std::size_t i = 0; i < z->numel(); ++i) {
      CHECK(y->data[i] == 4.0 * z->data[i]);  // exact, not approximate
    }
  }
}

TEST_CASE("vs6 zero input with zero delta propagates zero") {
  Rng rng(9);
  Vs6Params p = init_vs6_params(2, 12, rng);
  for (auto& d : p.dir) d.delta = zeros({2, 2}, true);
  auto y = vs6_forward(nullptr, zeros({3, 4}), p);
  for (Real v : y->data) CHECK(v == 0.0);
}

TEST_CASE("vs6 on a 1x1 patch matches the hand-computed scalar form") {
  Rng rng(12);
  Vs6Params p = init_vs6_params(1, 1, rng);
  double x = 0.8;
  auto y = vs6_forward(nullptr, T({1, 1}, {x}), p);
  double expect = 0.0;
  for (const auto& d : p.dir) {
    double delta = d.H1->data[0] * x * d.G->data[0] + d.delta->data[0];
    double bbar = delta * (d.H2->data[0] * x);
    double c = d.H3->data[0] * x;
    expect += c * (bbar * x) + d.Dmat->data[0] * x;
  }
  CHECK(y->data[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("vs6 output stays finite for small random parameters") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    int edge = (seed % 2 == 0) ? 4 : 8;
    Vs6Params p = init_vs6_params(1 + static_cast<int>(rng.index(4)),
                                  edge * edge, rng);
    for (auto& d : p.dir) {
      // Every parameter from N(0, 0.02^2), including delta and A.
      d.delta = randn({p.state_dim, p.state_dim}, rng, 0.02, true);
      d.A = randn({p.state_dim, p.state_dim}, rng, 0.02, true);
    }
    auto z = randn({edge, edge}, rng, 1.0);
    auto y = vs6_forward(nullptr, z, p);
    for (Real v : y->data) {
      REQUIRE(std::isfinite(v));
    }
  }
}

TEST_CASE("vssm block is the identity under zero output projection") {
  Rng rng(15);
  VssmBlockParams bp = init_vssm_block(2, 2, 2, 4, 4, rng);
  bp.out_w = zeros({2, 4, 1, 1}, true);
  bp.out_b = zeros({2}, true);
  auto x = randn({2, 4, 4}, rng, 1.0);
  auto y = vssm_block_forward(nullptr, x, bp, nullptr);
  CHECK(y->data == x->data);  // exact residual pass-through
}

TEST_CASE("vssm block with zero gate branch is the identity") {
  Rng rng(16);
  VssmBlockParams bp = init_vssm_block(2, 2, 2, 4, 4, rng);
  bp.gate_w = zeros({4, 2, 1, 1}, true);
  bp.gate_b = zeros({4}, true);
  bp.out_b = zeros({2}, true);
  auto x = randn({2, 4, 4}, rng, 1.0);
  auto y = vssm_block_forward(nullptr, x, bp, nullptr);
  CHECK(y->data == x->data);
}

TEST_CASE("vssm block gradient passes finite differences") {
  Rng rng(18);
  VssmBlockParams bp = init_vssm_block(2, 2, 2, 4, 4, rng);
  auto x = randn({2, 4, 4}, rng, 0.7, true);
  auto csi_add = randn({4}, rng, 0.3, true);
  auto wrt = block_param_list(bp);
  wrt.push_back(x);
  wrt.push_back(csi_add);
  auto res = check_gradients(
      "vssm_block",
      [&](Tape* t) {
        return weighted_sum(t, vssm_block_forward(t, x, bp, csi_add), 18);
      },
      wrt, 1e-4, 1e-5, /*max_entries_per_tensor=*/24, /*pick_seed=*/18);
  INFO("err=", res.max_rel_err);
  CHECK(res.pass);
}

TEST_CASE("scan-core MAC count is exactly linear in sequence length") {
  for (int n : {1, 2, 4, 8}) {
    for (int d : {8, 32, 256}) {
      auto base = scan_core_macs(n, d);
      auto doubled = scan_core_macs(n, 2 * d);
      CHECK(doubled == 2 * base);
    }
  }
  // The attention yardstick grows superlinearly in the same comparison.
  CHECK(reference_attention_macs(512, 64) > 2 * reference_attention_macs(256, 64));
}
