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

#include "gpt/sampler.hpp"

#include <cmath>
#include <limits>

#include "alloc.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "gpt/kernels.hpp"
#include "parallel.hpp"

namespace shadowgpt::gpt {

namespace {

constexpr size_t kSampleChunk = 64;

template <typename S>
class Decoder {
   public:
    Decoder(const ModelParams<S> &p, size_t batch) : p_(p), batch_(batch) {
        const ModelConfig &c = p.config;
        const int L = c.seq_len();
        keys_.assign(c.n_layers, MatR<S>(batch * L, c.d_model));
        values_.assign(c.n_layers, MatR<S>(batch * L, c.d_model));
    }

    /// g-encoder output for every record, the input at position 0.
    MatR<S> prefix(std::span<const double> g) const {
        const ModelConfig &c = p_.config;
        const ParamLayout &lay = p_.layout;
        const int d = c.d_model;
        MatR<S> g_in(batch_, c.param_dim);
        for (size_t b = 0; b < batch_; b++) {
            for (int k = 0; k < c.param_dim; k++) {
                g_in(b, k) = static_cast<S>(g[b * c.param_dim + k]);
            }
        }
        MatR<S> pre;
        linear_forward<S>(g_in, p_.mat(lay.genc_w1, c.param_dim, d), p_.vec(lay.genc_b1, d), pre);
        MatR<S> out;
        linear_forward<S>(gelu<S>(pre), p_.mat(lay.genc_w2, d, d), p_.vec(lay.genc_b2, d), out);
        return out;
    }

    /// Input rows for token slot `slot`, i.e. sequence position slot + 1.
    MatR<S> token_input(std::span<const uint8_t> tokens, int slot) const {
        const ModelConfig &c = p_.config;
        auto tok = p_.mat(p_.layout.tok_emb, c.vocab_size, c.d_model);
        auto pos = p_.mat(p_.layout.pos_emb, c.token_slots(), c.d_model);
        MatR<S> x(batch_, c.d_model);
        for (size_t b = 0; b < batch_; b++) {
            x.row(b) = tok.row(tokens[b]) + pos.row(slot);
        }
        return x;
    }

    /// Runs position t for every record and returns the last hidden state.
    MatR<S> step(MatR<S> x, int t) {
        const ModelConfig &c = p_.config;
        const ParamLayout &lay = p_.layout;
        const int d = c.d_model;
        const int L = c.seq_len();
        const int hd = c.head_dim();
        const S scale = S(1) / std::sqrt(static_cast<S>(hd));
        MatR<S> xhat, a, qkv, ctx(batch_, d), attn, f1, f2;
        ColVec<S> rstd;
        std::vector<S> w(t + 1);
        for (int l = 0; l < c.n_layers; l++) {
            const LayerSlots &s = lay.layers[l];
            MatR<S> &K = keys_[l];
            MatR<S> &V = values_[l];
            layer_norm_forward<S>(x, p_.vec(s.ln1_g, d), p_.vec(s.ln1_b, d), xhat, rstd, a);
            linear_forward<S>(a, p_.mat(s.w_qkv, d, 3 * d), p_.vec(s.b_qkv, 3 * d), qkv);
            for (size_t b = 0; b < batch_; b++) {
                const Eigen::Index r0 = static_cast<Eigen::Index>(b) * L;
                K.row(r0 + t) = qkv.row(b).segment(d, d);
                V.row(r0 + t) = qkv.row(b).segment(2 * d, d);
                for (int h = 0; h < c.n_heads; h++) {
                    auto q = qkv.row(b).segment(h * hd, hd);
                    S mx = -std::numeric_limits<S>::infinity();
                    for (int j = 0; j <= t; j++) {
                        w[j] = q.dot(K.row(r0 + j).segment(h * hd, hd)) * scale;
                        mx = std::max(mx, w[j]);
                    }
                    S sum = 0;
                    for (int j = 0; j <= t; j++) {
                        w[j] = std::exp(w[j] - mx);
                        sum += w[j];
                    }
                    auto out = ctx.row(b).segment(h * hd, hd);
                    out.setZero();
                    for (int j = 0; j <= t; j++) {
                        out += (w[j] / sum) * V.row(r0 + j).segment(h * hd, hd);
                    }
                }
            }
            linear_forward<S>(ctx, p_.mat(s.w_o, d, d), p_.vec(s.b_o, d), attn);
            MatR<S> h = x + attn;
            layer_norm_forward<S>(h, p_.vec(s.ln2_g, d), p_.vec(s.ln2_b, d), xhat, rstd, a);
            linear_forward<S>(a, p_.mat(s.w_ff1, d, c.d_ff), p_.vec(s.b_ff1, c.d_ff), f1);
            linear_forward<S>(gelu<S>(f1), p_.mat(s.w_ff2, c.d_ff, d), p_.vec(s.b_ff2, d), f2);
            x = h + f2;
            if (!x.allFinite()) {
                throw NumericError("non-finite activation in layer " + std::to_string(l));
            }
        }
        return x;
    }

    /// Final norm and head: rows of [log p(+1), log p(-1)].
    MatR<S> head(const MatR<S> &x) const {
        const ModelConfig &c = p_.config;
        const ParamLayout &lay = p_.layout;
        const int d = c.d_model;
        MatR<S> xhat, a, logits;
        ColVec<S> rstd;
        layer_norm_forward<S>(x, p_.vec(lay.lnf_g, d), p_.vec(lay.lnf_b, d), xhat, rstd, a);
        linear_forward<S>(a, p_.mat(lay.head_w, d, 2), p_.vec(lay.head_b, 2), logits);
        return log_softmax2<S>(logits);
    }

   private:
    const ModelParams<S> &p_;
    size_t batch_;
    std::vector<MatR<S>> keys_;
    std::vector<MatR<S>> values_;
};

void check_inputs(const ModelConfig &c, size_t records, std::span<const double> g,
                  std::span<const uint8_t> basis_tokens) {
    if (g.size() != records * c.param_dim) {
        throw ParameterError("parameter vector length does not match model param_dim=" +
                             std::to_string(c.param_dim));
    }
    if (basis_tokens.size() != records * c.n_qubits) {
        throw ParameterError("basis length does not match model N=" + std::to_string(c.n_qubits));
    }
    for (uint8_t t : basis_tokens) {
        if (!dataset::is_basis_token(t)) {
            throw ParameterError("token " + std::to_string(t) + " is not a basis token");
        }
    }
}

template <typename S>
void sample_chunk(const ModelParams<S> &p, std::span<const double> g, std::span<const uint8_t> basis,
                  std::span<Rng> rngs, std::span<int8_t> outcomes, std::span<double> log_prob) {
    const int N = p.config.n_qubits;
    const size_t B = rngs.size();
    Decoder<S> dec(p, B);
    dec.step(dec.prefix(g), 0);
    std::vector<uint8_t> column(B);
    for (int i = 0; i < N; i++) {
        for (size_t b = 0; b < B; b++) {
            column[b] = basis[b * N + i];
        }
        MatR<S> logp = dec.head(dec.step(dec.token_input(column, 2 * i), 2 * i + 1));
        for (size_t b = 0; b < B; b++) {
            double lp_plus = static_cast<double>(logp(b, 0));
            bool plus = uniform01(rngs[b]) < std::exp(lp_plus);
            outcomes[b * N + i] = plus ? 1 : -1;
            log_prob[b] += plus ? lp_plus : static_cast<double>(logp(b, 1));
            column[b] = plus ? dataset::kPlus : dataset::kMinus;
        }
        if (i + 1 < N) {
            dec.step(dec.token_input(column, 2 * i + 1), 2 * i + 2);
        }
    }
}

}  // namespace

template <typename S>
SampleBatch sample_batch(const ModelParams<S> &p, std::span<const double> g, std::span<const uint8_t> basis_tokens,
                         std::span<Rng> rngs, int threads) {
    const ModelConfig &c = p.config;
    const size_t B = rngs.size();
    check_inputs(c, B, g, basis_tokens);
    SampleBatch out;
    out.outcomes.assign(B * c.n_qubits, 0);
    out.log_prob.assign(B, 0.0);
    const size_t chunks = (B + kSampleChunk - 1) / kSampleChunk;
    parallel_for(chunks, threads, [&](size_t k) {
        size_t begin = k * kSampleChunk;
        size_t n = std::min(B, begin + kSampleChunk) - begin;
        sample_chunk<S>(p, g.subspan(begin * c.param_dim, n * c.param_dim),
                        basis_tokens.subspan(begin * c.n_qubits, n * c.n_qubits), rngs.subspan(begin, n),
                        std::span<int8_t>(out.outcomes).subspan(begin * c.n_qubits, n * c.n_qubits),
                        std::span<double>(out.log_prob).subspan(begin, n));
    });
    return out;
}

SampleBatch sample_batch(const AnyModel &model, std::span<const double> g, std::span<const uint8_t> basis_tokens,
                         std::span<Rng> rngs, int threads) {
    keep_heap_resident();
    return std::visit([&](const auto &m) { return sample_batch(m, g, basis_tokens, rngs, threads); }, model);
}

shadow::OutcomeString sample_outcomes(const AnyModel &model, std::span<const double> g,
                                      const shadow::PauliBasisString &basis, Rng &rng) {
    std::vector<uint8_t> tokens;
    for (auto p : basis.bases) {
        tokens.push_back(dataset::basis_token(p));
    }
    SampleBatch s = sample_batch(model, g, tokens, std::span<Rng>(&rng, 1), 1);
    return {std::move(s.outcomes)};
}

template <typename S>
MatR<S> incremental_logp(const ModelParams<S> &p, const BatchView &batch) {
    const ModelConfig &c = p.config;
    const int N = c.n_qubits;
    const size_t B = batch.size;
    check_inputs(c, B, batch.params, std::vector<uint8_t>(B * N, dataset::kZ));
    Decoder<S> dec(p, B);
    dec.step(dec.prefix(batch.params), 0);
    MatR<S> logp(B * N, 2);
    std::vector<uint8_t> column(B);
    for (int slot = 0; slot < c.token_slots(); slot++) {
        for (size_t b = 0; b < B; b++) {
            column[b] = batch.tokens[b * c.token_slots() + slot];
        }
        MatR<S> x = dec.step(dec.token_input(column, slot), slot + 1);
        if (slot % 2 == 0) {
            MatR<S> lp = dec.head(x);
            for (size_t b = 0; b < B; b++) {
                logp.row(b * N + slot / 2) = lp.row(b);
            }
        }
    }
    return logp;
}

template SampleBatch sample_batch<double>(const ModelParams<double> &, std::span<const double>,
                                          std::span<const uint8_t>, std::span<Rng>, int);
template SampleBatch sample_batch<float>(const ModelParams<float> &, std::span<const double>,
                                         std::span<const uint8_t>, std::span<Rng>, int);
template MatR<double> incremental_logp<double>(const ModelParams<double> &, const BatchView &);
template MatR<float> incremental_logp<float>(const ModelParams<float> &, const BatchView &);

}  // namespace shadowgpt::gpt
