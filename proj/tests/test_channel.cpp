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
#include <limits>

#include "doctest.h"
#include "testutil.hpp"
#include "vjscc/channel.hpp"
#include "vjscc/gradcheck.hpp"

using namespace vjscc;
using testutil::T;
using testutil::weighted_sum;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mean |symbol|^2 of a packed [2c,h,w] tensor.
double mean_symbol_power(const Tensor& x) {
  double acc = 0.0;
  for (Real v : x.data) acc += v * v;
  return acc / (static_cast<double>(x.numel()) / 2.0);
}

}  // namespace

TEST_CASE("power_normalize scales constant-magnitude input by 1/2") {
  auto x = zeros({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) x->data[i] = 2.0;  // real plane = 2
  auto sig = power_normalize(nullptr, x);
  CHECK(sig.power_scale == doctest::Approx(0.5));
  CHECK(mean_symbol_power(*sig.symbols) == doctest::Approx(1.0));
  CHECK_FALSE(sig.degenerate_power);
}

TEST_CASE("power_normalize fixed point and positive homogeneity") {
  Rng rng(3);
  auto x = randn({4, 3, 3}, rng, 1.0);
  auto unit = power_normalize(nullptr, x);
  auto again = power_normalize(nullptr, unit.symbols);
  CHECK(again.power_scale == doctest::Approx(1.0).epsilon(1e-12));

  // Scaling by a power of two changes nothing, bit for bit.
  auto x2 = mul_scalar(nullptr, x, 2.0);
  auto a = power_normalize(nullptr, x);
  auto b = power_normalize(nullptr, x2);
  CHECK(a.symbols->data == b.symbols->data);

  auto x3 = mul_scalar(nullptr, x, 3.7);
  auto c = power_normalize(nullptr, x3);
  for (std::size_t i = 0; i < a.symbols->numel(); ++i) {
    CHECK(c.symbols->data[i] ==
          doctest::Approx(a.symbols->data[i]).epsilon(1e-12));
  }
}

TEST_CASE("power_normalize flags all-zero input and passes it through") {
  auto sig = power_normalize(nullptr, zeros({2, 2, 2}));
  CHECK(sig.degenerate_power);
  CHECK(sig.power_scale == 1.0);
  for (Real v : sig.symbols->data) CHECK(v == 0.0);
}

TEST_CASE("noiseless transmission is exact") {
  Rng rng(5);
  auto x = randn({2, 4, 4}, rng, 1.0);
  auto sig = power_normalize(nullptr, x);
  auto real = draw_realization(ChannelKind::awgn, kInf, 42);
  auto y = transmit(nullptr, sig, real);
  CHECK(y.symbols->data == sig.symbols->data);
}

TEST_CASE("awgn noise variance is calibrated at 0 dB over 1e6 symbols") {
  auto x = zeros({2, 1000, 500});  // 5e5 complex symbols per transmit
  auto sig = power_normalize(nullptr, x);
  sig.degenerate_power = false;
  double var_acc = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 2; ++s) {
    auto real = draw_realization(ChannelKind::awgn, 0.0, 1000 + s);
    auto y = transmit(nullptr, sig, real);
    for (Real v : y.symbols->data) var_acc += v * v;
    count += y.symbols->numel() / 2;
  }
  double noise_var = var_acc / static_cast<double>(count);
  CHECK(noise_var > 0.99);
  CHECK(noise_var < 1.01);
}

TEST_CASE("awgn calibration within 0.1 dB across the SNR grid") {
  auto x = zeros({2, 500, 400});  // 2e5 complex symbols
  ChannelSignal sig;
  sig.symbols = x;
  for (double snr : {1.0, 5.0, 10.0, 15.0, 20.0}) {
    double var_acc = 0.0;
    std::size_t count = 0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
      auto real = draw_realization(ChannelKind::awgn, snr,
                                   mix_seed(77, static_cast<std::uint64_t>(snr), rep));
      auto y = transmit(nullptr, sig, real);
      for (Real v : y.symbols->data) var_acc += v * v;
      count += y.symbols->numel() / 2;
    }
    double measured_snr_db = -10.0 * std::log10(var_acc / static_cast<double>(count));
    CHECK(std::abs(measured_snr_db - snr) < 0.1);
  }
}

TEST_CASE("rayleigh fading statistics") {
  double power_acc = 0.0, re_acc = 0.0, im_acc = 0.0, re2 = 0.0, im2 = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto real = draw_realization(ChannelKind::rayleigh, 10.0,
                                 mix_seed(5, static_cast<std::uint64_t>(i)));
    power_acc += real.h_re * real.h_re + real.h_im * real.h_im;
    re_acc += real.h_re;
    im_acc += real.h_im;
    re2 += real.h_re * real.h_re;
    im2 += real.h_im * real.h_im;
  }
  double mean_power = power_acc / draws;
  CHECK(mean_power > 0.99);
  CHECK(mean_power < 1.01);
  double var_re = re2 / draws - (re_acc / draws) * (re_acc / draws);
  double var_im = im2 / draws - (im_acc / draws) * (im_acc / draws);
  CHECK(var_re == doctest::Approx(0.5).epsilon(0.02));
  CHECK(var_im == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("mmse equalizer limits") {
  Rng rng(8);
  auto x = randn({2, 3, 3}, rng, 1.0);
  ChannelSignal sig;
  sig.symbols = x;

  // h = 1, no noise: estimate equals the received signal.
  ChannelRealization r1;
  r1.kind = ChannelKind::rayleigh;
  r1.snr_db = kInf;
  r1.h_re = 1.0;
  r1.h_im = 0.0;
  auto eq1 = mmse_equalize(nullptr, sig, r1);
  for (std::size_t i = 0; i < x->numel(); ++i) {
    CHECK(eq1.symbols->data[i] == doctest::Approx(x->data[i]).epsilon(1e-12));
  }

  // h = 2, sigma^2 -> 0, y = 2x: estimate recovers x.
  ChannelRealization r2 = r1;
  r2.h_re = 2.0;
  auto y2 = complex_scale(nullptr, x, 2.0, 0.0);
  ChannelSignal sig2;
  sig2.symbols = y2;
  auto eq2 = mmse_equalize(nullptr, sig2, r2);
  for (std::size_t i = 0; i < x->numel(); ++i) {
    CHECK(eq2.symbols->data[i] == doctest::Approx(x->data[i]).epsilon(1e-12));
  }
}

TEST_CASE("mmse beats zero forcing at sigma^2 = 1") {
  // 1e5 random unit-power symbols through y = h x + n at 0 dB.
  const int n = 100000;
  Rng rng(13);
  double mmse_err = 0.0, zf_err = 0.0;
  for (int i = 0; i < n; ++i) {
    double xr = std::sqrt(0.5) * rng.normal();
    double xi = std::sqrt(0.5) * rng.normal();
    double hr = std::sqrt(0.5) * rng.normal();
    double hi = std::sqrt(0.5) * rng.normal();
    double nr = std::sqrt(0.5) * rng.normal();
    double ni = std::sqrt(0.5) * rng.normal();
    double yr = hr * xr - hi * xi + nr;
    double yi = hr * xi + hi * xr + ni;
    double h2 = hr * hr + hi * hi;
    // MMSE with sigma^2 = 1.
    double mr = (hr * yr + hi * yi) / (h2 + 1.0);
    double mi = (hr * yi - hi * yr) / (h2 + 1.0);
    mmse_err += (mr - xr) * (mr - xr) + (mi - xi) * (mi - xi);
    // Zero forcing.
    double zr = (hr * yr + hi * yi) / h2;
    double zi = (hr * yi - hi * yr) / h2;
    zf_err += (zr - xr) * (zr - xr) + (zi - xi) * (zi - xi);
  }
  CHECK(mmse_err / n < zf_err / n);
}

TEST_CASE("transmit is bit-reproducible for a fixed noise seed") {
  Rng rng(21);
  auto x = randn({2, 8, 8}, rng, 1.0);
  auto sig = power_normalize(nullptr, x);
  auto real = draw_realization(ChannelKind::rayleigh, 7.0, 99);
  auto y1 = transmit(nullptr, sig, real);
  auto y2 = transmit(nullptr, sig, real);
  CHECK(y1.symbols->data == y2.symbols->data);
}

TEST_CASE("gradients flow through normalize, fading and equalization") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto x = randn({2, 3, 3}, rng, 1.0, true);
    auto real = draw_realization(ChannelKind::rayleigh, 4.0, seed * 31);
    auto res = check_gradients(
        "channel_chain",
        [&](Tape* t) {
          ChannelSignal sig = power_normalize(t, x);
          ChannelSignal rx = transmit(t, sig, real);
          ChannelSignal eq = mmse_equalize(t, rx, real);
          return weighted_sum(t, eq.symbols, seed);
        },
        {x}, 1e-4, 1e-5);
    INFO("seed=", seed, " err=", res.max_rel_err);
    CHECK(res.pass);
  }
}
