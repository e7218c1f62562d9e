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

#include "vjscc/vs6.hpp"

#include <cmath>
#include <stdexcept>

namespace vjscc {

namespace {

// delta starts at 0.1 on the diagonal. The off-diagonal entries start at a
// large positive bias: with A = -I the products Delta*A then sit well below
// -log(N) off the diagonal, keeping every entry of the elementwise
// exponential small enough for a contractive recurrence at long sequence
// lengths. A zero off-diagonal start would put exp(Delta*A) near the
// all-ones matrix, whose spectral radius is N.
constexpr Real kDeltaDiagInit = 0.1;
constexpr Real kDeltaOffDiagInit = 5.0;
constexpr Real kWeightStd = 0.02;

// Column-major vectorization: reshape of the transpose reads the matrix
// column by column.
TensorPtr vec_colmajor(Tape* tape, const TensorPtr& z) {
  int d = z->dim(0) * z->dim(1);
  return reshape(tape, transpose2d(tape, z), {d});
}

// Inverse of vec_colmajor into an [rows, cols] matrix.
TensorPtr colmajor_to_matrix(Tape* tape, const TensorPtr& v, int rows,
                             int cols) {
  return transpose2d(tape, reshape(tape, v, {cols, rows}));
}

void check_square(const char* op, const TensorPtr& t, int n) {
  if (t->shape != Shape{n, n}) {
    throw std::invalid_argument(std::string(op) + ": expected [" +
                                std::to_string(n) + "," + std::to_string(n) +
                                "], got " + shape_str(t->shape));
  }
}

// Dense matrix exponential by scaling and squaring with a truncated series;
// plenty for the small state dimensions used here.
std::vector<Real> expm(const std::vector<Real>& m, int n) {
  Real norm = 0.0;
  for (int i = 0; i < n; ++i) {
    Real row = 0.0;
    for (int j = 0; j < n; ++j) row += std::abs(m[i * n + j]);
    norm = std::max(norm, row);
  }
  int squarings = 0;
  Real scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  std::vector<Real> ms(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) ms[i] = m[i] * scale;

  std::vector<Real> result(m.size(), 0.0), term(m.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    result[i * n + i] = 1.0;
    term[i * n + i] = 1.0;
  }
  std::vector<Real> next(m.size());
  for (int k = 1; k <= 18; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Real acc = 0.0;
        for (int l = 0; l < n; ++l) acc += term[i * n + l] * ms[l * n + j];
        next[i * n + j] = acc / k;
      }
    }
    term = next;
    for (std::size_t i = 0; i < m.size(); ++i) result[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Real acc = 0.0;
        for (int l = 0; l < n; ++l) acc += result[i * n + l] * result[l * n + j];
        next[i * n + j] = acc;
      }
    }
    result = next;
  }
  return result;
}

// Gaussian elimination with partial pivoting; solves M x = rhs in place.
std::vector<Real> solve_linear(std::vector<Real> m, std::vector<Real> rhs,
                               int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r * n + col]) > std::abs(m[pivot * n + col])) pivot = r;
    }
    if (std::abs(m[pivot * n + col]) < 1e-300) {
      throw std::runtime_error("discretize_zoh_exact: Delta*A is singular");
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(m[col * n + j], m[pivot * n + j]);
      std::swap(rhs[col], rhs[pivot]);
    }
    Real inv = 1.0 / m[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      Real f = m[r * n + col] * inv;
      if (f == 0.0) continue;
      for (int j = col; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
      rhs[r] -= f * rhs[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    Real acc = rhs[r];
    for (int j = r + 1; j < n; ++j) acc -= m[r * n + j] * rhs[j];
    rhs[r] = acc / m[r * n + r];
  }
  return rhs;
}

}  // namespace

std::array<TensorPtr, 4> flatten_four_directions(Tape* tape,
                                                 const TensorPtr& z) {
  if (z->rank() != 2) {
    throw std::invalid_argument("flatten_four_directions: patch must be 2D, got " +
                                shape_str(z->shape));
  }
  int d = z->dim(0) * z->dim(1);
  TensorPtr v1 = vec_colmajor(tape, z);                 // column scan
  TensorPtr v2 = reshape(tape, z, {d});                 // row scan = vec(z^T)
  TensorPtr v3 = reverse(tape, v1);
  TensorPtr v4 = reverse(tape, v2);
  return {v1, v2, v3, v4};
}

ProjectedParams project_parameters(Tape* tape, const TensorPtr& v,
                                   const Vs6Direction& p) {
  if (v->rank() != 1) {
    throw std::invalid_argument("project_parameters: v must be rank-1, got " +
                                shape_str(v->shape));
  }
  int d = v->dim(0);
  TensorPtr vcol = reshape(tape, v, {d, 1});
  TensorPtr h1v = matmul(tape, p.H1, vcol);  // [N,1]
  ProjectedParams out;
  out.Delta = add(tape, matmul(tape, h1v, p.G), p.delta);  // [N,N]
  out.B = matmul(tape, p.H2, vcol);                        // [N,1]
  out.C = transpose2d(tape, matmul(tape, p.H3, vcol));     // [1,N]
  return out;
}

Discretized discretize_taylor(Tape* tape, const TensorPtr& Delta,
                              const TensorPtr& A, const TensorPtr& B) {
  Discretized out;
  out.Abar = exp(tape, clamp_max(tape, matmul(tape, Delta, A), kExpClamp));
  out.Bbar = matmul(tape, Delta, B);
  return out;
}

Discretized discretize_zoh_exact(const TensorPtr& Delta, const TensorPtr& A,
                                 const TensorPtr& B) {
  int n = Delta->dim(0);
  check_square("discretize_zoh_exact", Delta, n);
  check_square("discretize_zoh_exact", A, n);
  if (B->shape != Shape{n, 1}) {
    throw std::invalid_argument("discretize_zoh_exact: B must be [" +
                                std::to_string(n) + ",1], got " +
                                shape_str(B->shape));
  }
  std::vector<Real> da(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Real acc = 0.0;
      for (int k = 0; k < n; ++k)
        acc += Delta->data[i * n + k] * A->data[k * n + j];
      da[i * n + j] = acc;
    }
  }
  std::vector<Real> e = expm(da, n);
  std::vector<Real> db(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Real acc = 0.0;
    for (int k = 0; k < n; ++k) acc += Delta->data[i * n + k] * B->data[k];
    db[i] = acc;
  }
  std::vector<Real> rhs(n, 0.0);
  for (int i = 0; i < n; ++i) {
    Real acc = 0.0;
    for (int k = 0; k < n; ++k) {
      Real eik = e[i * n + k] - (i == k ? 1.0 : 0.0);
      acc += eik * db[k];
    }
    rhs[i] = acc;
  }
  std::vector<Real> bbar = solve_linear(da, rhs, n);
  Discretized out;
  out.Abar = tensor({n, n}, std::move(e));
  out.Bbar = tensor({n, 1}, std::move(bbar));
  return out;
}

TensorPtr selective_scan(Tape* tape, const TensorPtr& v, const TensorPtr& Abar,
                         const TensorPtr& Bbar, const TensorPtr& C,
                         const TensorPtr& Dmat) {
  if (v->rank() != 1) {
    throw std::invalid_argument("selective_scan: v must be rank-1, got " +
                                shape_str(v->shape));
  }
  int dlen = v->dim(0);
  int n = Abar->dim(0);
  check_square("selective_scan", Abar, n);
  if (Bbar->shape != Shape{n, 1} || C->shape != Shape{1, n} ||
      Dmat->shape != Shape{1, 1}) {
    throw std::invalid_argument(
        "selective_scan: parameter shapes " + shape_str(Bbar->shape) + "/" +
        shape_str(C->shape) + "/" + shape_str(Dmat->shape) +
        " do not match state dim " + std::to_string(n));
  }
  bool rg = v->requires_grad || Abar->requires_grad || Bbar->requires_grad ||
            C->requires_grad || Dmat->requires_grad;
  auto out = zeros({dlen}, rg);
  // States h_0..h_D, kept for the backward recurrence.
  auto states =
      std::make_shared<std::vector<Real>>(static_cast<std::size_t>(dlen + 1) * n, 0.0);
  std::vector<Real> h(n, 0.0), hn(n, 0.0);
  for (int t = 0; t < dlen; ++t) {
    Real vt = v->data[t];
    for (int i = 0; i < n; ++i) {
      Real acc = Bbar->data[i] * vt;
      const Real* arow = Abar->data.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) acc += arow[j] * h[j];
      hn[i] = acc;
    }
    h = hn;
    std::copy(h.begin(), h.end(),
              states->begin() + static_cast<std::size_t>(t + 1) * n);
    Real y = Dmat->data[0] * vt;
    for (int i = 0; i < n; ++i) y += C->data[i] * h[i];
    out->data[t] = y;
  }
  if (tape && rg) {
    tape->record({v, Abar, Bbar, C, Dmat}, out,
                 [v, Abar, Bbar, C, Dmat, out, states, dlen, n] {
      std::vector<Real> gh(n, 0.0), ghn(n, 0.0);
      for (int t = dlen - 1; t >= 0; --t) {
        Real gy = out->grad[t];
        Real vt = v->data[t];
        const Real* ht = states->data() + static_cast<std::size_t>(t + 1) * n;
        const Real* hprev = states->data() + static_cast<std::size_t>(t) * n;
        if (Dmat->requires_grad) Dmat->grad[0] += gy * vt;
        if (C->requires_grad) {
          for (int i = 0; i < n; ++i) C->grad[i] += gy * ht[i];
        }
        if (v->requires_grad) v->grad[t] += Dmat->data[0] * gy;
        for (int i = 0; i < n; ++i) gh[i] += C->data[i] * gy;
        if (Abar->requires_grad) {
          for (int i = 0; i < n; ++i) {
            Real g = gh[i];
            if (g == 0.0) continue;
            Real* garow = Abar->grad.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) garow[j] += g * hprev[j];
          }
        }
        if (Bbar->requires_grad) {
          for (int i = 0; i < n; ++i) Bbar->grad[i] += gh[i] * vt;
        }
        if (v->requires_grad) {
          Real acc = 0.0;
          for (int i = 0; i < n; ++i) acc += Bbar->data[i] * gh[i];
          v->grad[t] += acc;
        }
        // gh <- Abar^T gh
        for (int j = 0; j < n; ++j) {
          Real acc = 0.0;
          for (int i = 0; i < n; ++i)
            acc += Abar->data[static_cast<std::size_t>(i) * n + j] * gh[i];
          ghn[j] = acc;
        }
        gh = ghn;
      }
    });
  }
  return out;
}

TensorPtr merge_directions(Tape* tape, const TensorPtr& Y1, const TensorPtr& Y2,
                           const TensorPtr& Y3, const TensorPtr& Y4) {
  TensorPtr t12 = add(tape, Y1, transpose2d(tape, Y2));
  TensorPtr t34 = reverse(tape, add(tape, Y3, transpose2d(tape, Y4)));
  return add(tape, t12, t34);
}

TensorPtr vs6_forward(Tape* tape, const TensorPtr& z, const Vs6Params& p) {
  int h = z->dim(0), w = z->dim(1);
  if (h * w != p.seq_len) {
    throw std::invalid_argument("vs6_forward: patch " + shape_str(z->shape) +
                                " does not match sequence length " +
                                std::to_string(p.seq_len));
  }
  auto vs = flatten_four_directions(tape, z);
  std::array<TensorPtr, 4> ys;
  for (int j = 0; j < 4; ++j) {
    ProjectedParams proj = project_parameters(tape, vs[j], p.dir[j]);
    Discretized disc = discretize_taylor(tape, proj.Delta, p.dir[j].A, proj.B);
    ys[j] = selective_scan(tape, vs[j], disc.Abar, disc.Bbar, proj.C,
                           p.dir[j].Dmat);
  }
  // Directions 1 and 3 reshape column-major to [h,w]; 2 and 4 to [w,h].
  TensorPtr Y1 = colmajor_to_matrix(tape, ys[0], h, w);
  TensorPtr Y2 = colmajor_to_matrix(tape, ys[1], w, h);
  TensorPtr Y3 = colmajor_to_matrix(tape, ys[2], h, w);
  TensorPtr Y4 = colmajor_to_matrix(tape, ys[3], w, h);
  return merge_directions(tape, Y1, Y2, Y3, Y4);
}

TensorPtr layer_norm_chw(Tape* tape, const TensorPtr& x,
                         const TensorPtr& gamma, const TensorPtr& beta,
                         Real eps) {
  if (x->rank() != 3) {
    throw std::invalid_argument("layer_norm_chw: input must be [C,H,W], got " +
                                shape_str(x->shape));
  }
  int c = x->dim(0), h = x->dim(1), w = x->dim(2);
  TensorPtr flat = reshape(tape, x, {c, h * w});
  TensorPtr sites = transpose2d(tape, flat);  // [h*w, c]
  TensorPtr normed = layer_norm(tape, sites, gamma, beta, eps);
  return reshape(tape, transpose2d(tape, normed), {c, h, w});
}

TensorPtr vssm_block_forward(Tape* tape, const TensorPtr& x,
                             const VssmBlockParams& bp,
                             const TensorPtr& csi_add) {
  int cz = bp.channels * bp.expand;
  TensorPtr xn = layer_norm_chw(tape, x, bp.ln_gamma, bp.ln_beta, 1e-5);

  TensorPtr b1 = conv2d(tape, xn, bp.in_w, bp.in_b, 1, 0);
  b1 = depthwise_conv2d(tape, b1, bp.dw_w, bp.dw_b, 1, 1);
  b1 = silu(tape, b1);
  if (csi_add) b1 = add_channel_bias(tape, b1, csi_add);

  std::vector<TensorPtr> scanned(static_cast<std::size_t>(cz));
  for (int ch = 0; ch < cz; ++ch) {
    TensorPtr zi = channel_slice(tape, b1, ch);
    scanned[ch] = vs6_forward(tape, zi, bp.vs6[ch]);
  }
  TensorPtr y = channel_stack(tape, scanned);

  TensorPtr gate = silu(tape, conv2d(tape, xn, bp.gate_w, bp.gate_b, 1, 0));
  TensorPtr gated = mul(tape, y, gate);
  TensorPtr projected = conv2d(tape, gated, bp.out_w, bp.out_b, 1, 0);
  return add(tape, x, projected);
}

Vs6Params init_vs6_params(int state_dim, int seq_len, Rng& rng) {
  Vs6Params p;
  p.state_dim = state_dim;
  p.seq_len = seq_len;
  for (auto& d : p.dir) {
    d.G = randn({1, state_dim}, rng, kWeightStd, true);
    d.delta = zeros({state_dim, state_dim}, true);
    for (int i = 0; i < state_dim; ++i) {
      for (int j = 0; j < state_dim; ++j) {
        d.delta->data[i * state_dim + j] =
            (i == j) ? kDeltaDiagInit : kDeltaOffDiagInit;
      }
    }
    d.H1 = randn({state_dim, seq_len}, rng, kWeightStd, true);
    d.H2 = randn({state_dim, seq_len}, rng, kWeightStd, true);
    d.H3 = randn({state_dim, seq_len}, rng, kWeightStd, true);
    d.A = zeros({state_dim, state_dim}, true);
    for (int i = 0; i < state_dim; ++i) d.A->data[i * state_dim + i] = -1.0;
    d.Dmat = randn({1, 1}, rng, kWeightStd, true);
  }
  return p;
}

VssmBlockParams init_vssm_block(int channels, int expand, int state_dim,
                                int h, int w, Rng& rng) {
  VssmBlockParams bp;
  bp.channels = channels;
  bp.expand = expand;
  int cz = channels * expand;
  bp.ln_gamma = full({channels}, 1.0, true);
  bp.ln_beta = zeros({channels}, true);
  bp.in_w = randn({cz, channels, 1, 1}, rng, kWeightStd, true);
  bp.in_b = zeros({cz}, true);
  bp.dw_w = randn({cz, 3, 3}, rng, kWeightStd, true);
  bp.dw_b = zeros({cz}, true);
  bp.gate_w = randn({cz, channels, 1, 1}, rng, kWeightStd, true);
  bp.gate_b = zeros({cz}, true);
  bp.out_w = randn({channels, cz, 1, 1}, rng, kWeightStd, true);
  bp.out_b = zeros({channels}, true);
  bp.vs6.reserve(static_cast<std::size_t>(cz));
  for (int i = 0; i < cz; ++i) {
    bp.vs6.push_back(init_vs6_params(state_dim, h * w, rng));
  }
  return bp;
}

}  // namespace vjscc
