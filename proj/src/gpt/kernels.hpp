// Copyright 2026 The ShadowGPT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Forward/backward building blocks shared by the batched trainer and the
// incremental sampler. Activations are row-major, one row per position.

#include <cmath>
#include <type_traits>
#include <vector>

#include "gpt/model.hpp"

namespace shadowgpt::gpt {

constexpr double kLayerNormEps = 1e-5;

template <typename S>
Eigen::Map<MatR<S>> gmat(S *base, size_t offset, int rows, int cols) {
    return {base + offset, rows, cols};
}

template <typename S>
Eigen::Map<RowVec<S>> gvec(S *base, size_t offset, int n) {
    return {base + offset, n};
}

template <typename S, typename W, typename Bv>
void linear_forward(const MatR<S> &in, const W &w, const Bv &b, MatR<S> &out) {
    out.noalias() = in * w;
    out.rowwise() += b;
}

// Column sums accumulated row by row. Eigen's colwise().sum() picks its
// summation order from the memory alignment of the operands, which would make
// gradients differ between otherwise identical runs.
template <typename S, typename Expr>
RowVec<S> column_sum(const Expr &m) {
    RowVec<S> out = RowVec<S>::Zero(m.cols());
    for (Eigen::Index r = 0; r < m.rows(); r++) {
        out += m.row(r);
    }
    return out;
}

template <typename S, typename W, typename DW, typename DB>
void linear_backward(const MatR<S> &in, const W &w, const MatR<S> &dout, DW dw, DB db, MatR<S> *din) {
    dw.noalias() += in.transpose() * dout;
    db += column_sum<S>(dout);
    if (din) {
        din->noalias() = dout * w.transpose();
    }
}

template <typename S, typename G, typename Bv>
void layer_norm_forward(const MatR<S> &x, const G &gamma, const Bv &beta, MatR<S> &xhat, ColVec<S> &rstd,
                        MatR<S> &out) {
    const auto rows = x.rows();
    const auto cols = x.cols();
    xhat.resize(rows, cols);
    out.resize(rows, cols);
    rstd.resize(rows);
    for (Eigen::Index r = 0; r < rows; r++) {
        S mean = x.row(r).mean();
        auto centered = (x.row(r).array() - mean).eval();
        S var = centered.square().mean();
        S rs = S(1) / std::sqrt(var + static_cast<S>(kLayerNormEps));
        rstd(r) = rs;
        xhat.row(r) = (centered * rs).matrix();
        out.row(r) = xhat.row(r).cwiseProduct(gamma) + beta;
    }
}

template <typename S, typename G, typename DG, typename DB>
void layer_norm_backward(const MatR<S> &dout, const MatR<S> &xhat, const ColVec<S> &rstd, const G &gamma, DG dgamma,
                         DB dbeta, MatR<S> &dx) {
    dgamma += column_sum<S>(dout.cwiseProduct(xhat));
    dbeta += column_sum<S>(dout);
    const auto rows = dout.rows();
    dx.resize(rows, dout.cols());
    for (Eigen::Index r = 0; r < rows; r++) {
        auto dxhat = dout.row(r).cwiseProduct(gamma).eval();
        S m1 = dxhat.mean();
        S m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
        dx.row(r) = (rstd(r) * (dxhat.array() - m1 - xhat.row(r).array() * m2)).matrix();
    }
}

// Vectorized tanh. Eigen only vectorizes tanh for float, so doubles go
// through exp; the two agree to a few ulp.
template <typename S, typename Expr>
auto fast_tanh(const Expr &u) {
    if constexpr (std::is_same_v<S, float>) {
        return u.tanh();
    } else {
        return S(1) - S(2) / ((S(2) * u).exp() + S(1));
    }
}

// tanh approximation of GELU; `t` receives the tanh term for the backward pass.
template <typename S>
MatR<S> gelu(const MatR<S> &x, MatR<S> *t_out = nullptr) {
    const S c = static_cast<S>(0.7978845608028654);
    const S k = static_cast<S>(0.044715);
    auto xa = x.array();
    MatR<S> t = fast_tanh<S>((c * (xa + k * xa.cube())).eval()).matrix();
    MatR<S> out = (S(0.5) * xa * (S(1) + t.array())).matrix();
    if (t_out) {
        *t_out = std::move(t);
    }
    return out;
}

template <typename S>
MatR<S> gelu_backward(const MatR<S> &x, const MatR<S> &t, const MatR<S> &dout) {
    const S c = static_cast<S>(0.7978845608028654);
    const S k = static_cast<S>(0.044715);
    auto xa = x.array();
    auto ta = t.array();
    return (dout.array() * (S(0.5) * (S(1) + ta) +
                            S(0.5) * xa * (S(1) - ta.square()) * c * (S(1) + S(3) * k * xa.square())))
        .matrix();
}

/// Causal multi-head attention over `batch` independent sequences of length L.
/// qkv columns are [Q | K | V], each d wide and split into heads.
template <typename S>
void attention_forward(const MatR<S> &qkv, size_t batch, int L, int d, int heads, std::vector<S> &probs,
                       MatR<S> &ctx) {
    const int hd = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    probs.assign(batch * heads * L * L, S(0));
    ctx.resize(batch * L, d);
    MatR<S> scores(L, L);
    for (size_t b = 0; b < batch; b++) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * L;
        for (int h = 0; h < heads; h++) {
            auto q = qkv.block(r0, h * hd, L, hd);
            auto k = qkv.block(r0, d + h * hd, L, hd);
            auto v = qkv.block(r0, 2 * d + h * hd, L, hd);
            scores.noalias() = q * k.transpose();
            S *p = probs.data() + (b * heads + h) * L * L;
            for (int i = 0; i < L; i++) {
                S mx = scores(i, 0) * scale;
                for (int j = 1; j <= i; j++) {
                    mx = std::max(mx, scores(i, j) * scale);
                }
                S sum = 0;
                for (int j = 0; j <= i; j++) {
                    S e = std::exp(scores(i, j) * scale - mx);
                    p[i * L + j] = e;
                    sum += e;
                }
                for (int j = 0; j <= i; j++) {
                    p[i * L + j] /= sum;
                }
            }
            Eigen::Map<const MatR<S>> pm(p, L, L);
            ctx.block(r0, h * hd, L, hd).noalias() = pm * v;
        }
    }
}

template <typename S>
void attention_backward(const MatR<S> &qkv, const std::vector<S> &probs, const MatR<S> &dctx, size_t batch, int L,
                        int d, int heads, MatR<S> &dqkv) {
    const int hd = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    dqkv.resize(batch * L, 3 * d);
    MatR<S> dp(L, L);
    MatR<S> ds(L, L);
    for (size_t b = 0; b < batch; b++) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(b) * L;
        for (int h = 0; h < heads; h++) {
            auto q = qkv.block(r0, h * hd, L, hd);
            auto k = qkv.block(r0, d + h * hd, L, hd);
            auto v = qkv.block(r0, 2 * d + h * hd, L, hd);
            auto dout = dctx.block(r0, h * hd, L, hd);
            Eigen::Map<const MatR<S>> pm(probs.data() + (b * heads + h) * L * L, L, L);
            dp.noalias() = dout * v.transpose();
            dqkv.block(r0, 2 * d + h * hd, L, hd).noalias() = pm.transpose() * dout;
            for (int i = 0; i < L; i++) {
                S dot = 0;
                for (int j = 0; j <= i; j++) {
                    dot += pm(i, j) * dp(i, j);
                }
                for (int j = 0; j < L; j++) {
                    ds(i, j) = j <= i ? pm(i, j) * (dp(i, j) - dot) * scale : S(0);
                }
            }
            dqkv.block(r0, h * hd, L, hd).noalias() = ds * k;
            dqkv.block(r0, d + h * hd, L, hd).noalias() = ds.transpose() * q;
        }
    }
}

template <typename S>
MatR<S> log_softmax2(const MatR<S> &logits) {
    MatR<S> out(logits.rows(), 2);
    for (Eigen::Index r = 0; r < logits.rows(); r++) {
        S a = logits(r, 0);
        S b = logits(r, 1);
        S mx = std::max(a, b);
        S lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
        out(r, 0) = a - lse;
        out(r, 1) = b - lse;
    }
    return out;
}

template <typename S>
MatR<S> log_softmax2_backward(const MatR<S> &logp, const MatR<S> &dlogp) {
    MatR<S> out(logp.rows(), 2);
    for (Eigen::Index r = 0; r < logp.rows(); r++) {
        S total = dlogp(r, 0) + dlogp(r, 1);
        out(r, 0) = dlogp(r, 0) - std::exp(logp(r, 0)) * total;
        out(r, 1) = dlogp(r, 1) - std::exp(logp(r, 1)) * total;
    }
    return out;
}

}  // namespace shadowgpt::gpt
